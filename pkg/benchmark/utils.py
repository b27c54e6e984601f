import time


class Timer:
    """Wall-clock timer for a named stage; usable as a context manager.

    The elapsed seconds of the last completed measurement are kept in ``elapsed``.
    """

    def __init__(self, text="", quiet=False):
        self._text = text
        self._quiet = quiet
        self._start = None
        self.elapsed = None

    def start(self):
        if self._start is not None:
            raise RuntimeError("Timer {!r} is already running. Call .stop() first".format(self._text))
        self._start = time.perf_counter()

    def stop(self):
        if self._start is None:
            raise RuntimeError("Timer {!r} is not running. Call .start() first".format(self._text))
        self.elapsed = time.perf_counter() - self._start
        self._start = None
        if not self._quiet:
            print("{:<40} {:10.4f}s".format(self._text, self.elapsed))
        return self.elapsed

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc_info):
        self.stop()
