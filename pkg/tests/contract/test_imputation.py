"""
Contract tests for censored wage imputation and non-employed baseline wages.
"""

import math

import numpy as np
import pytest

from src.exceptions import EmptySampleError, ImputationError, NotInSampleError
from src.models.spell import HoursBand, SpellRecord, TaskClass
from src.services.imputation import (
    build_nonemployed_sample,
    fit_censored_normal,
    impute_censored,
    impute_nonemployed_baseline,
    truncated_normal_mean,
)
from src.services.paneldata import records_to_frame

LIMIT = 4.3


def _employed(worker, year, wage, muni=1, censored=False, hours=HoursBand.FULL_TIME,
              female=False, district=1):
    return SpellRecord(worker_id=worker, year=year, employed=True, muni_id=muni,
                       district_id=district, occupation_code='R001',
                       task_class=TaskClass.ROUTINE, log_daily_wage=wage, censored=censored,
                       hours_band=hours, female=female)


@pytest.fixture
def censored_frame():
    """400 full-time spells from N(4, 0.3) top-coded at LIMIT."""
    rng = np.random.default_rng(21)
    latent = rng.normal(4.0, 0.3, size=400)
    records = [_employed(i + 1, 1990, min(w, LIMIT), censored=bool(w > LIMIT))
               for i, w in enumerate(latent)]
    return records_to_frame(records)


class TestCensoredNormal:
    """Censored maximum likelihood and the truncated mean."""

    def test_truncated_mean_at_zero(self):
        assert truncated_normal_mean(0.0, 1.0, 0.0) == pytest.approx(math.sqrt(2 / math.pi))

    def test_truncated_mean_above_limit(self):
        assert truncated_normal_mean(4.0, 0.3, LIMIT) > LIMIT

    def test_fit_recovers_parameters(self):
        rng = np.random.default_rng(3)
        latent = rng.normal(4.0, 0.3, size=5000)

        mu, sigma = fit_censored_normal(np.minimum(latent, LIMIT), latent > LIMIT)

        assert mu == pytest.approx(4.0, abs=0.02)
        assert sigma == pytest.approx(0.3, abs=0.02)

    def test_too_few_uncensored(self):
        with pytest.raises(ImputationError):
            fit_censored_normal(np.array([LIMIT, LIMIT, 4.0]), np.array([True, True, False]))


class TestImputeCensored:
    """Cell-wise imputation of top-coded wages."""

    def test_replaces_only_censored_wages(self, censored_frame):
        result = impute_censored(censored_frame)
        before, after = censored_frame, result.frame
        censored = before['censored'].to_numpy()

        assert result.report.imputed == int(censored.sum())
        assert np.all(after['log_daily_wage'].to_numpy()[censored] > LIMIT)
        np.testing.assert_array_equal(after['log_daily_wage'].to_numpy()[~censored],
                                      before['log_daily_wage'].to_numpy()[~censored])
        assert after['censored'].equals(before['censored'])

    def test_input_frame_untouched(self, censored_frame):
        original = censored_frame['log_daily_wage'].copy()

        impute_censored(censored_frame)

        assert censored_frame['log_daily_wage'].equals(original)

    def test_small_cell_uses_pooled_fit(self, censored_frame):
        result = impute_censored(censored_frame, min_cell=10_000)

        assert result.report.cells_fitted == 0
        assert result.report.fallback_cells == [(1990, False, 1)]

    def test_stochastic_draws_are_seeded(self, censored_frame):
        a = impute_censored(censored_frame, stochastic=True, seed=4).frame
        b = impute_censored(censored_frame, stochastic=True, seed=4).frame

        assert a['log_daily_wage'].equals(b['log_daily_wage'])
        censored = censored_frame['censored'].to_numpy()
        assert np.all(a['log_daily_wage'].to_numpy()[censored] > LIMIT)

    def test_nothing_to_impute(self):
        frame = records_to_frame([_employed(1, 1990, 4.0), _employed(2, 1990, 4.1)])

        result = impute_censored(frame)

        assert result.report.imputed == 0
        assert result.frame['log_daily_wage'].equals(frame['log_daily_wage'])


class TestNonEmployedBaseline:
    """Counterfactual base wages of the non-employed."""

    def test_shifted_by_mean_growth(self):
        history = records_to_frame([
            _employed(1, 1988, 4.0),
            SpellRecord(worker_id=1, year=1990, employed=False),
        ])

        wage = impute_nonemployed_baseline(history, {1988: 3.9, 1990: 4.0}, 1990)

        assert wage == pytest.approx(4.1)

    def test_employed_at_base(self):
        history = records_to_frame([_employed(1, 1988, 4.0), _employed(1, 1990, 4.0)])

        with pytest.raises(NotInSampleError):
            impute_nonemployed_baseline(history, {1988: 3.9, 1990: 4.0}, 1990)

    def test_spell_outside_window(self):
        history = records_to_frame([_employed(1, 1985, 4.0)])

        with pytest.raises(NotInSampleError):
            impute_nonemployed_baseline(history, {1985: 3.9, 1990: 4.0}, 1990)

    def test_part_time_spell_does_not_qualify(self):
        history = records_to_frame([_employed(1, 1989, 4.0, hours=HoursBand.PART_UNDER_18)])

        with pytest.raises(NotInSampleError):
            impute_nonemployed_baseline(history, {1989: 3.9, 1990: 4.0}, 1990)

    def test_mean_wage_year_missing(self):
        history = records_to_frame([_employed(1, 1988, 4.0)])

        with pytest.raises(EmptySampleError):
            impute_nonemployed_baseline(history, {1990: 4.0}, 1990)
        with pytest.raises(EmptySampleError):
            impute_nonemployed_baseline(history, {1988: 3.9}, 1990)

    def test_sample_keeps_recent_study_region_workers(self):
        frame = records_to_frame([
            _employed(1, 1988, 4.0, muni=1),
            _employed(2, 1988, 4.2, muni=7),
            _employed(3, 1988, 4.0, muni=1),
            _employed(3, 1990, 4.0, muni=1),
            _employed(4, 1990, 4.1, muni=1),
        ])

        sample = build_nonemployed_sample(frame, 1990, regions={1})

        assert list(sample.index) == [1]
        assert sample.at[1, 'origin'] == 1
        assert sample.at[1, 'last_year'] == 1988
        assert sample.at[1, 'age0'] == 32.0
