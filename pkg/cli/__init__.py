"""
Command-line experiment runner for ModularFlow.
"""
