"""Common exception root so the CLI can map domain failures to exit code 1."""


class ReadAloudError(Exception):
    """Base class for every domain error raised by this package."""
