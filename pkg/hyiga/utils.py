import logging
import os
from pathlib import Path
from typing import Mapping, Optional, Union

import torch
from filelock import FileLock

from hyiga.errors import ConfigurationError

logger = logging.getLogger(__name__)

__all__ = ["THREADS_ENV", "get_num_threads", "configure_threads", "write_artifacts"]

THREADS_ENV = "HYIGA_THREADS"

LOCK_TIMEOUT = 600


def get_num_threads(requested: Optional[int] = None) -> int:
    """Number of worker threads allowed for this process.

    ``requested`` is capped by the ``HYIGA_THREADS`` environment variable when it is set.
    Without either, a single thread is used so that results are bitwise reproducible.
    """
    cap = os.environ.get(THREADS_ENV)
    if cap is not None:
        try:
            cap_value = int(cap)
        except ValueError:
            raise ConfigurationError("{} must be a positive integer, got {!r}".format(THREADS_ENV, cap))
        if cap_value < 1:
            raise ConfigurationError("{} must be a positive integer, got {!r}".format(THREADS_ENV, cap))
    else:
        cap_value = None

    if requested is None:
        return cap_value or 1
    if requested < 1:
        raise ConfigurationError("thread count must be positive, got {}".format(requested))
    return min(requested, cap_value) if cap_value is not None else requested


def configure_threads(requested: Optional[int] = None) -> int:
    """Applies :func:`get_num_threads` to torch's intra-op pool and returns the value."""
    num_threads = get_num_threads(requested)
    torch.set_num_threads(num_threads)
    logger.debug("Using {} torch thread(s)".format(num_threads))
    return num_threads


def write_artifacts(directory: Union[str, Path], artifacts: Mapping[str, Union[str, bytes]]) -> None:
    """Writes all ``artifacts`` (file name -> content) into ``directory``.

    Writes are serialized through a lock file inside the directory, and every file is
    first written next to its target and then moved into place, so readers never see
    a partially written artifact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with FileLock(str(directory / ".hyiga.lock"), timeout=LOCK_TIMEOUT):
        for name, content in artifacts.items():
            target = directory / name
            partial = target.with_name(target.name + ".part")
            try:
                if isinstance(content, bytes):
                    partial.write_bytes(content)
                else:
                    with open(partial, "w", encoding="utf8", newline="\n") as fileobj:
                        fileobj.write(content)
                os.replace(partial, target)
            except OSError as err:
                raise OSError("Failed to write {}: {}".format(target, err)) from err
            logger.info("Wrote {}".format(target))
