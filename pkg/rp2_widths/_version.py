import importlib.metadata
import logging
import pathlib
import shutil
import subprocess
from typing import Optional

_DISTRIBUTION = "rp2-widths"


def describe_version(
    *,
    logger: Optional[logging.Logger] = None,
) -> str:
    """Version stamped into reports: git describe, else the installed version."""
    logger = logger or logging.getLogger(__name__)
    version = _git_describe(pathlib.Path(__file__).resolve().parent, logger=logger)
    if version:
        return version
    try:
        return importlib.metadata.version(_DISTRIBUTION)
    except importlib.metadata.PackageNotFoundError:
        logger.debug(f'distribution "{_DISTRIBUTION}" is not installed')
    return "unknown"


def _git_describe(
    directory: pathlib.Path,
    *,
    logger: logging.Logger,
) -> Optional[str]:
    executable = shutil.which("git")
    if executable is None:
        logger.debug("git not found: skip git describe")
        return None
    command = [executable, "describe", "--tags", "--always", "--dirty"]
    try:
        process = subprocess.run(
            command,
            check=True,
            cwd=directory,
            encoding="utf-8",
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
        )
    except subprocess.CalledProcessError as error:
        logger.debug(
            f"{error.__class__.__name__}:"
            f" {{'return_code': {error.returncode}, 'stderr': {error.stderr!r}}}"
        )
        return None
    except OSError as error:
        logger.debug(f"{error.__class__.__name__}: {error}")
        return None
    return process.stdout.strip() or None
