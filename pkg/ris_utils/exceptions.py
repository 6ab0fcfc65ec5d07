from __future__ import annotations

from typing import Any


class RISPricingError(Exception):
    pass


# config exceptions
class ConfigParseError(RISPricingError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"Config field '{field}': {message}")


class ValidationError(RISPricingError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"Invalid value for '{field}': {message}")


# solver exceptions
class StructuralError(RISPricingError):
    pass


class SolverError(RISPricingError):
    def __init__(self, message: str, diagnostics: dict[str, Any] = None):
        self.diagnostics = diagnostics or dict()
        if self.diagnostics:
            details = ', '.join(f'{k}={v}' for k, v in self.diagnostics.items())
            message = f'{message} ({details})'
        super().__init__(message)


class OracleSizeError(RISPricingError):
    def __init__(self, dimension: str, value: int, limit: int):
        self.dimension = dimension
        super().__init__(f'Oracle refuses instances with {dimension}={value} (limit: {limit}).')


# harness exceptions
class SweepPointError(RISPricingError):
    def __init__(self, point: dict[str, Any], cause: Exception):
        self.point = point
        self.cause = cause
        super().__init__(f'Sweep point {point} failed: {cause}')


class AuditError(RISPricingError):
    def __init__(self, row: dict[str, Any], recomputed: float):
        self.row = row
        self.recomputed = recomputed
        super().__init__(f"Audit mismatch at {row}: CSV has U_bs={row.get('U_bs')}, "
                         f"serialized state gives {recomputed}")
