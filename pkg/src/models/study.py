"""Study window and report models."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.models.regression import RegressionResult

SIGN_PLUS = '+'
SIGN_MINUS = '-'


@dataclass
class StudyWindow:
    """Base and end period of a study plus the shock definition years.

    Attributes:
        base_year: Base period (shock denominator year)
        end_year: End period of the outcome changes
        shock_year: Commuter counts of this year define the shock
        early_year: Year whose outcomes use the early (partial) inflow
    """

    base_year: int = 1990
    end_year: int = 1993
    shock_year: int = 1992
    early_year: int = 1991

    def __post_init__(self):
        """Validate window after initialization."""
        self.validate()

    def validate(self):
        """Validate year ordering.

        Raises:
            ValueError: If the years are out of order
        """
        if self.base_year >= self.end_year:
            raise ValueError(
                f"base_year ({self.base_year}) must precede end_year ({self.end_year})"
            )
        if not (self.base_year < self.early_year <= self.shock_year):
            raise ValueError(
                f"Need base_year < early_year <= shock_year, got {self.base_year}, "
                f"{self.early_year}, {self.shock_year}"
            )

    @property
    def gap(self) -> int:
        return self.end_year - self.base_year

    def to_dict(self) -> Dict[str, int]:
        return {
            'base_year': self.base_year,
            'end_year': self.end_year,
            'shock_year': self.shock_year,
            'early_year': self.early_year,
        }


@dataclass
class ReportComponent:
    """One row of a report: a regression with the sign it enters with.

    Attributes:
        name: Component label
        sign: '+', '-' or '' for totals and stand-alone rows
        result: Regression result
        additive: Whether the component enters the additivity check
        coefficient: Name of the reported coefficient in result
    """

    name: str
    sign: str
    result: RegressionResult
    additive: bool = True
    coefficient: str = 'shock'

    def __post_init__(self):
        if self.sign not in (SIGN_PLUS, SIGN_MINUS, ''):
            raise ValueError(f"sign must be '+', '-' or '', got {self.sign!r}")

    @property
    def value(self) -> float:
        return self.result.coef(self.coefficient)

    @property
    def signed_value(self) -> float:
        return -self.value if self.sign == SIGN_MINUS else self.value

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {'component': self.name, 'sign': self.sign}
        row.update(self.result.summary(self.coefficient))
        return row


@dataclass
class DecompositionReport:
    """A study's total effect and its signed components.

    Attributes:
        study: Study name
        total: Total effect (None for tables without a total)
        components: Additive and stand-alone components in table order
        extras: Supplementary rows outside the additivity check
        exclusions: Municipalities dropped, keyed by reason
        notes: Free-text diagnostics printed under the table
    """

    study: str
    total: Optional[ReportComponent]
    components: List[ReportComponent] = field(default_factory=list)
    extras: List[ReportComponent] = field(default_factory=list)
    exclusions: Dict[str, List[int]] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def additivity_residual(self) -> Optional[float]:
        """Signed sum of the additive components minus the total."""
        additive = [c for c in self.components if c.additive]
        if self.total is None or not additive:
            return None
        return math.fsum(c.signed_value for c in additive) - self.total.value

    def component(self, name: str) -> ReportComponent:
        for item in self.rows_components():
            if item.name == name:
                return item
        raise KeyError(f"Report '{self.study}' has no component '{name}'")

    def rows_components(self) -> List[ReportComponent]:
        head = [self.total] if self.total is not None else []
        return head + list(self.components) + list(self.extras)

    def rows(self) -> List[Dict[str, Any]]:
        return [c.to_row() for c in self.rows_components()]


@dataclass
class EventStudyResult:
    """Per-year coefficients of one outcome against the fixed shock.

    Attributes:
        outcome: Outcome name
        results: Year -> regression result
        skipped: Years without data or with an undefined outcome
    """

    outcome: str
    results: Dict[int, RegressionResult] = field(default_factory=dict)
    skipped: List[int] = field(default_factory=list)

    def coefficient(self, year: int) -> float:
        return self.results[year].coef('shock')

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for year in sorted(self.results):
            summary = self.results[year].summary('shock')
            out.append({
                'year': year,
                'coefficient': summary['coefficient'],
                'ci_low': summary['ci_low'],
                'ci_high': summary['ci_high'],
            })
        return out


@dataclass
class SubgroupResult:
    """Displacement and pure wage effect of one worker subgroup."""

    subgroup: str
    displacement: RegressionResult
    pure_wage: RegressionResult
    n_workers: int = 0
