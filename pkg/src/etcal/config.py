from __future__ import annotations

from dataclasses import dataclass

# defaults used throughout the experiments this toolkit targets
DEFAULT_ALPHA = 0.1
DEFAULT_DELTA = 0.01
DEFAULT_GRID_DELTA = 0.01


@dataclass(frozen=True)
class CalibConfig:
    """Calibration settings.

    ``grid_delta`` is the spacing of the threshold grid ``{0, Δ, 2Δ, ..., 1}``;
    ``1 / grid_delta`` must be an integer so that both endpoints are on it.
    Grid values are produced as ``i / steps`` to avoid accumulated drift.
    """

    alpha: float = DEFAULT_ALPHA
    delta: float = DEFAULT_DELTA
    grid_delta: float = DEFAULT_GRID_DELTA
    split_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not 0.0 < self.grid_delta < 1.0:
            raise ValueError(f"grid_delta must be in (0, 1), got {self.grid_delta}")
        steps = round(1.0 / self.grid_delta)
        if abs(steps * self.grid_delta - 1.0) > 1e-9:
            raise ValueError(f"1/grid_delta must be an integer, got grid_delta={self.grid_delta}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError(f"split_fraction must be in (0, 1), got {self.split_fraction}")

    @property
    def steps(self) -> int:
        return round(1.0 / self.grid_delta)

    @property
    def grid_size(self) -> int:
        return self.steps + 1

    def grid_value(self, i: int) -> float:
        return i / self.steps

    def grid(self) -> list[float]:
        return [self.grid_value(i) for i in range(self.grid_size)]
