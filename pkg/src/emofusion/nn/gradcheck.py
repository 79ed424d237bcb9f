"""Central-difference gradient checking for Parameter collections."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..exceptions import ConfigError, NumericError
from .params import Parameter

__all__ = ["GradCheckReport", "grad_check"]


@dataclass
class GradCheckReport:
    """Worst relative error per parameter block plus the overall verdict."""

    tolerance: float
    max_relative_error: float = 0.0
    per_parameter: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"grad_check {status}: max relative error "
            f"{self.max_relative_error:.3e} (tolerance {self.tolerance:.1e})"
        )


def grad_check(
    loss_fn: Callable[[], float],
    params: Mapping[str, Parameter],
    step: float = 1e-5,
    tolerance: float = 1e-4,
    floor: float = 1e-3,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss_fn`` must run a full forward and backward pass, accumulate
    gradients into ``params`` and return the scalar loss. It has to be
    deterministic across calls (fix any rng-driven masks up front).

    Each coordinate is perturbed by ``step`` in both directions; the
    relative error |a - n| / max(|a| + |n|, floor) uses an absolute
    floor so near-zero gradient pairs do not blow up the ratio.
    """
    if step <= 0.0 or tolerance <= 0.0 or floor <= 0.0:
        raise ConfigError("step, tolerance and floor must all be positive")
    if not params:
        raise ConfigError("grad_check needs at least one parameter")

    for p in params.values():
        p.zero_grad()
    base_loss = float(loss_fn())
    if not np.isfinite(base_loss):
        raise NumericError(f"loss is not finite: {base_loss}")
    analytic = {name: p.grad.copy() for name, p in params.items()}

    report = GradCheckReport(tolerance=tolerance)
    for name, p in params.items():
        flat = p.value.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        worst = 0.0
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            loss_plus = float(loss_fn())
            flat[idx] = original - step
            loss_minus = float(loss_fn())
            flat[idx] = original
            if not np.isfinite(loss_plus) or not np.isfinite(loss_minus):
                raise NumericError(f"perturbed loss not finite at {name}[{idx}]")
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            a = grad_flat[idx]
            rel = abs(a - numeric) / max(abs(a) + abs(numeric), floor)
            worst = max(worst, rel)
        report.per_parameter[name] = worst
        report.max_relative_error = max(report.max_relative_error, worst)

    # Leave gradients in the analytic state the caller produced.
    for name, p in params.items():
        p.grad[...] = analytic[name]
    return report
