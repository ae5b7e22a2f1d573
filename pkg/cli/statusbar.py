"""
Simple application-wide status channel.
Register a text stream from the runner and call `set_status()` from anywhere.
"""
from typing import Optional, TextIO, Tuple

LEVELS = ('info', 'success', 'warning', 'error')

_stream: Optional[TextIO] = None
_last: Optional[Tuple[str, str]] = None


def register(stream: TextIO) -> None:
    """Register the stream that receives status lines (stderr for the CLI)."""
    global _stream
    _stream = stream


def set_status(message: str, level: str = "info") -> None:
    """Write a status line.

    level: one of 'info', 'success', 'warning', 'error'
    """
    global _last
    if level not in LEVELS:
        level = 'info'
    _last = (level, message)
    if _stream is None:
        return
    prefixes = {
        'info': '',
        'success': 'OK: ',
        'warning': 'Warning: ',
        'error': 'Error: ',
    }
    try:
        _stream.write(f"{prefixes[level]}{message}\n")
        _stream.flush()
    except (OSError, ValueError):
        # Closed stream
        pass


def last_status() -> Optional[Tuple[str, str]]:
    """Return (level, message) of the most recent status, if any."""
    return _last


def clear() -> None:
    """Forget the last status and detach the stream."""
    global _stream, _last
    _stream = None
    _last = None
