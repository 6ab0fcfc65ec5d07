from __future__ import annotations

import argparse
import json
from typing import Any

__all__ = ['Override', 'SeedRange', 'ValueList']


class Override:
    """A single `--set key=value` override."""

    def __init__(self, key: str, value: Any):
        self.key = key
        self.value = value

    @classmethod
    def convert(cls, argument: str) -> Override:
        key, sep, raw = argument.partition('=')
        key = key.strip()
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"Overrides must look like key=value, got '{argument}'.")

        # JSON first so that numbers, lists and booleans keep their type
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw

        return cls(key, value)

    @staticmethod
    def to_dict(overrides: list[Override] | None) -> dict[str, Any]:
        return {o.key: o.value for o in overrides or []}

    def __repr__(self):
        return f'<Override {self.key}={self.value!r}>'


class SeedRange(list):
    """Parses `0..9`, `1,4,7` or `3` into a list of seeds. Ranges are inclusive."""

    @classmethod
    def convert(cls, argument: str) -> SeedRange:
        seeds = cls()

        for block in argument.split(','):
            block = block.strip()
            if not block:
                continue

            try:
                if '..' in block:
                    start, end = (int(x) for x in block.split('..', 1))
                    if end < start:
                        raise argparse.ArgumentTypeError(f"Seed range '{block}' is reversed.")
                    seeds.extend(range(start, end + 1))
                else:
                    seeds.append(int(block))
            except ValueError:
                raise argparse.ArgumentTypeError(f"Invalid seed range: '{block}'.")

        if not seeds:
            raise argparse.ArgumentTypeError("At least one seed is required.")

        return seeds


class ValueList(list):
    """Comma separated floats, e.g. `-10,-5,0`."""

    @classmethod
    def convert(cls, argument: str) -> ValueList:
        try:
            values = cls(float(x) for x in argument.split(',') if x.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"Invalid value list: '{argument}'.")

        if not values:
            raise argparse.ArgumentTypeError("At least one value is required.")

        return values
