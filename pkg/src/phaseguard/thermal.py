"""Single-node RC thermal model for the switches and the discharge resistor."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


class StepTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ThermalParams:
    r_th: float = 0.5
    c_th: float = 0.1
    t_ambient: float = 25.0
    r_th_res: float = 2.0
    c_th_res: float = 0.2
    t_limit_switch: float = 150.0
    t_limit_res: float = 120.0

    def __post_init__(self):
        for name in ("r_th", "c_th", "r_th_res", "c_th_res"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.t_limit_switch <= self.t_ambient or self.t_limit_res <= self.t_ambient:
            raise ValueError("thermal limits must exceed t_ambient")

    @property
    def tau_switch(self) -> float:
        return self.r_th * self.c_th

    @property
    def tau_res(self) -> float:
        return self.r_th_res * self.c_th_res

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def rc_step(t, p_loss, dt, r_th, c_th, t_ambient):
    """Explicit Euler step of ``c_th*dT/dt = p_loss - (T - t_ambient)/r_th``.

    Works element-wise on arrays.  Raises :class:`StepTooLarge` unless
    ``dt <= 0.1*r_th*c_th``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if dt > 0.1 * r_th * c_th * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} s exceeds 0.1*r_th*c_th={0.1 * r_th * c_th:g} s")
    return t + dt / c_th * (p_loss - (t - t_ambient) / r_th)


def thermal_step(t_j, p_loss, dt: float, tp: ThermalParams, r_th_multiplier: float = 1.0):
    """Advance switch junction temperature(s) by ``dt``."""
    return rc_step(np.asarray(t_j, dtype=float) if np.ndim(t_j) else float(t_j),
                   p_loss, dt, tp.r_th * r_th_multiplier, tp.c_th, tp.t_ambient)


def resistor_step(t_res: float, p_loss: float, dt: float, tp: ThermalParams) -> float:
    return float(rc_step(t_res, p_loss, dt, tp.r_th_res, tp.c_th_res, tp.t_ambient))
