from __future__ import annotations

import math
import time


class Timer:
    def __init__(self, start: float = None):
        self.start = start if start is not None else time.perf_counter()

    @property
    def passed_seconds_in_float(self) -> float:
        return time.perf_counter() - self.start

    @property
    def passed_seconds_in_float_formatted(self) -> str:
        return '{:.5f}s'.format(self.passed_seconds_in_float)

    @property
    def passed_string(self) -> str:
        return self.parse_seconds_to_str(self.passed_seconds_in_float)

    @staticmethod
    def parse_seconds_to_str(total_seconds: float = 0, sep=' ') -> str:
        def plural_check(n: int):
            return 's' if n > 1 else ''

        if total_seconds < 1:
            return '{:.3f} seconds'.format(total_seconds)

        total_seconds = math.ceil(total_seconds)

        minutes, seconds = divmod(total_seconds, 60)
        hours, minutes = divmod(minutes, 60)

        str_blocks = list()
        if hours > 0:
            str_blocks.append(f'{hours} hour{plural_check(hours)}')
        if minutes > 0:
            str_blocks.append(f'{minutes} minute{plural_check(minutes)}')
        if seconds > 0:
            str_blocks.append(f'{seconds} second{plural_check(seconds)}')

        return sep.join(str_blocks)

    def __str__(self):
        return self.passed_string
