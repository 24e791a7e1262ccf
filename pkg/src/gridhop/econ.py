"""Discounted benefit of reinforcement deferral and operational savings."""

from __future__ import annotations

from dataclasses import dataclass

HOURS_PER_YEAR = 8760


class InvalidRate(ValueError):
    pass


@dataclass(frozen=True)
class EconParams:
    discount_rate: float = 0.0325
    horizon: int = 10
    annual_benefit: float = 0.0
    deferral_years: int = 5
    currency: str = "$"

    def __post_init__(self):
        _check(self.discount_rate, self.horizon)
        if self.deferral_years < 0:
            raise ValueError("deferral_years must be >= 0")


def _check(rate: float, years: int) -> None:
    if rate <= -1:
        raise InvalidRate(f"discount rate must exceed -1, got {rate}")
    if years < 0:
        raise ValueError(f"number of years must be >= 0, got {years}")


def deferral_cost_reduction(years: int, rate: float) -> float:
    """Percentage saving from postponing a capital cost by ``years``."""
    _check(rate, years)
    return 100.0 - 100.0 / (1.0 + rate) ** years


def lifetime_operational_benefit(annual_benefit: float, years: int, rate: float) -> float:
    """Present value of ``annual_benefit`` received at the end of each year."""
    _check(rate, years)
    return annual_benefit * sum((1.0 + rate) ** -i for i in range(1, years + 1))


def annuity_factor(years: int, rate: float) -> float:
    """Closed form of sum((1+d)^-i, i=1..N)."""
    _check(rate, years)
    if rate == 0:
        return float(years)
    return (1.0 - (1.0 + rate) ** -years) / rate


def annual_loss_energy(avg_loss_reduction_mw: float) -> float:
    """MWh/yr saved by an average loss reduction of ``avg_loss_reduction_mw``."""
    return avg_loss_reduction_mw * HOURS_PER_YEAR


def loss_reduction_annual_benefit(avg_loss_reduction_mw: float, price: float) -> float:
    if avg_loss_reduction_mw < 0 or price < 0:
        raise ValueError("loss reduction and price must be >= 0")
    return annual_loss_energy(avg_loss_reduction_mw) * price
