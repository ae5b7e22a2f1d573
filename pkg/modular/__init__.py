"""
Modular-flow numerics for ModularFlow.
Polynomial construction, matrix functions, the flow pipeline and estimators.
"""
