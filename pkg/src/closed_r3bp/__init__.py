"""closed-r3bp: closed-form secular normalization of the exterior restricted three-body problem."""

__version__ = "0.1.0"


def get_version() -> str:
    """Return the current closed-r3bp version string."""
    return __version__
