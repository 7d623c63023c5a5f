"""
Contract tests for spell ingestion, transitions and flow aggregation.
"""

import math

import pandas as pd
import pytest

from src.exceptions import (
    DuplicateSpellError,
    InvalidParameterError,
    SpellSchemaError,
    TransitionError,
)
from src.models.spell import (
    NON_EMPLOYED,
    SPELL_COLUMNS,
    HoursBand,
    Nationality,
    SpellRecord,
    TaskClass,
    TransitionClass,
)
from src.services.paneldata import (
    SpellPanel,
    aggregate_flows,
    build_transitions,
    classify_transition,
    fte_weight,
    load_spells,
    records_to_frame,
    select_main_spells,
    wage_bill,
    write_spells,
)


def _spell(worker, year, muni=None, hours=HoursBand.FULL_TIME, wage=4.0,
           task=TaskClass.ROUTINE, **kwargs):
    employed = muni is not None
    return SpellRecord(
        worker_id=worker,
        year=year,
        employed=employed,
        muni_id=muni,
        district_id=1 if employed else None,
        occupation_code='R001' if employed else None,
        task_class=task if employed else None,
        log_daily_wage=wage if employed else None,
        hours_band=hours if employed else None,
        **kwargs,
    )


@pytest.fixture
def small_frame():
    """Stayer, leaver, mover and entrant around municipalities 1 and 2."""
    return records_to_frame([
        _spell(1, 1990, 1),
        _spell(1, 1993, 1, hours=HoursBand.PART_18_TO_30),
        _spell(2, 1990, 1),
        _spell(2, 1993),
        _spell(3, 1990, 1),
        _spell(3, 1993, 2),
        _spell(4, 1993, 2),
        _spell(5, 1990, 1, apprentice=True),
        _spell(5, 1993, 1, apprentice=True),
    ])


class TestFTE:
    """Full-time equivalent weights."""

    def test_weights(self):
        assert fte_weight(HoursBand.FULL_TIME) == 1.0
        assert fte_weight('Part18to30') == 0.67
        assert fte_weight('PartUnder18') == 0.5

    def test_unknown_band(self):
        with pytest.raises(InvalidParameterError):
            fte_weight('Overtime')

    def test_non_employed_record_has_no_weight(self):
        assert _spell(1, 1990).fte == 0.0

    def test_employed_record_needs_municipality(self):
        with pytest.raises(ValueError):
            SpellRecord(worker_id=1, year=1990, employed=True, log_daily_wage=4.0)


class TestClassifyTransition:
    """Single-worker transition classes."""

    @pytest.mark.parametrize('muni0,muni1,region,expected', [
        (1, 1, 1, TransitionClass.STAYER),
        (1, None, 1, TransitionClass.DISPLACED),
        (1, 2, 1, TransitionClass.RELOCATED),
        (None, 1, 1, TransitionClass.INFLOW_FROM_NONEMP),
        (2, 1, 1, TransitionClass.INFLOW_FROM_OTHER_REGION),
        (None, None, None, TransitionClass.NONEMPLOYED_BOTH),
    ])
    def test_classes(self, muni0, muni1, region, expected):
        record = classify_transition(_spell(7, 1990, muni0), _spell(7, 1993, muni1), region)

        assert record.classification is expected

    def test_region_defaults_to_origin(self):
        record = classify_transition(_spell(7, 1990, 3), _spell(7, 1993, 4))

        assert record.region == 3
        assert record.classification is TransitionClass.RELOCATED

    def test_apprentice_counts_as_non_employment(self):
        record = classify_transition(_spell(7, 1990, 1, apprentice=True), _spell(7, 1993, 1))

        assert record.origin == NON_EMPLOYED
        assert record.classification is TransitionClass.INFLOW_FROM_NONEMP

    def test_part_time_wage_not_carried(self):
        record = classify_transition(_spell(7, 1990, 1, hours=HoursBand.PART_UNDER_18),
                                     _spell(7, 1993, 1))

        assert record.wage0 is None
        assert record.wage1 == 4.0
        assert record.fte0 == 0.5

    def test_region_untouched(self):
        with pytest.raises(TransitionError):
            classify_transition(_spell(7, 1990, 1), _spell(7, 1993, 2), study_region=3)

    def test_years_must_increase(self):
        with pytest.raises(TransitionError):
            classify_transition(_spell(7, 1993, 1), _spell(7, 1990, 1))

    def test_workers_must_match(self):
        with pytest.raises(TransitionError):
            classify_transition(_spell(7, 1990, 1), _spell(8, 1993, 1))


class TestBuildTransitions:
    """Vectorised roles for every worker and region."""

    def test_roles(self, small_frame):
        roles = build_transitions(small_frame, 1990, 1993)
        lookup = {(r.worker_id, r.region): r.classification for r in roles.itertuples()}

        assert lookup == {
            (1, 1): TransitionClass.STAYER.value,
            (2, 1): TransitionClass.DISPLACED.value,
            (3, 1): TransitionClass.RELOCATED.value,
            (3, 2): TransitionClass.INFLOW_FROM_OTHER_REGION.value,
            (4, 2): TransitionClass.INFLOW_FROM_NONEMP.value,
        }

    def test_regions_filter(self, small_frame):
        roles = build_transitions(small_frame, 1990, 1993, regions={2})

        assert set(roles['region']) == {2}
        assert len(roles) == 2

    def test_matches_single_worker_classifier(self, small_frame):
        roles = build_transitions(small_frame, 1990, 1993, regions={1})
        records = {r.worker_id: r for r in
                   [_spell(1, 1990, 1), _spell(2, 1990, 1), _spell(3, 1990, 1)]}
        ends = {1: _spell(1, 1993, 1), 2: _spell(2, 1993), 3: _spell(3, 1993, 2)}

        for row in roles.itertuples():
            expected = classify_transition(records[row.worker_id], ends[row.worker_id], 1)
            assert row.classification == expected.classification.value

    def test_base_must_precede_end(self, small_frame):
        with pytest.raises(TransitionError):
            build_transitions(small_frame, 1993, 1993)

    def test_panel_caches_transitions(self, small_frame):
        registry = pd.DataFrame({'district_id': [1, 1], 'is_border': [True, False],
                                 'distance_km': [10.0, float('nan')], 'n_workers0': [3, 1]},
                                index=pd.Index([1, 2], name='muni_id'))
        panel = SpellPanel(spells=small_frame, municipalities=registry)

        assert panel.transitions(1990, 1993) is panel.transitions(1990, 1993)
        assert panel.years == [1990, 1993]


class TestAggregateFlows:
    """FTE-weighted flow identities."""

    def test_identities_hold(self, small_frame):
        table = aggregate_flows(build_transitions(small_frame, 1990, 1993))
        row = table.frame.loc[1]

        assert row['E0'] == pytest.approx(row['e_stay'] + row['e_exit'] + row['e_relocate'])
        assert row['E1'] == pytest.approx(row['e_stay'] + row['e_inflow'])
        assert row['E0'] == pytest.approx(3.0)
        assert row['stayer_hours_change'] == pytest.approx(-0.33)

    def test_zero_base_employment_excluded(self, small_frame):
        table = aggregate_flows(build_transitions(small_frame, 1990, 1993))

        assert table.excluded == [2]
        assert list(table.frame.index) == [1]

    def test_task_split(self, small_frame):
        table = aggregate_flows(build_transitions(small_frame, 1990, 1993))
        row = table.frame.loc[1]

        assert row['routine_E0'] == pytest.approx(3.0)
        assert row['routine_exit'] == pytest.approx(1.0)
        assert table.task_excluded['abstract'] == [1]

    def test_records_satisfy_identity(self, small_frame):
        records = aggregate_flows(build_transitions(small_frame, 1990, 1993)).records()

        assert len(records) == 1
        assert records[0].identity_residual() == pytest.approx(0.0, abs=1e-12)
        assert records[0].task['routine']['E0'] == pytest.approx(3.0)


class TestSpellFiles:
    """Spell CSV writing and loading."""

    def test_write_then_load(self, small_frame, tmp_path):
        path = write_spells(small_frame, tmp_path / 'spells.csv')

        loaded = load_spells(path)

        assert path.read_text().splitlines()[0] == ','.join(SPELL_COLUMNS)
        assert loaded.report.rows_kept == len(small_frame)
        assert loaded.report.workers == 5
        assert loaded.frame['log_daily_wage'].isna().sum() == 1
        assert loaded.to_records()[0].hours_band is HoursBand.FULL_TIME

    def test_out_of_range_ages_discarded(self, tmp_path):
        frame = records_to_frame([_spell(1, 1990, 1, age=30), _spell(2, 1990, 1, age=70)])
        loaded = load_spells(write_spells(frame, tmp_path / 'spells.csv'))

        assert loaded.report.dropped_age == 1
        assert list(loaded.frame['worker_id']) == [1]

    def test_bad_integer_reports_line(self, tmp_path):
        path = tmp_path / 'spells.csv'
        path.write_text(
            ','.join(SPELL_COLUMNS) + '\n'
            + '1,1990,1,5,1,R001,Routine,4.0,0,FullTime,30,0,Apprenticeship,0,Native\n'
            + '2,1990,1,5,1,R001,Routine,4.0,0,FullTime,thirty,0,,0,Native\n'
        )

        with pytest.raises(SpellSchemaError) as exc:
            load_spells(path)

        assert exc.value.line_number == 3
        assert 'age' in str(exc.value)

    def test_non_employed_with_wage_rejected(self, tmp_path):
        path = tmp_path / 'spells.csv'
        path.write_text(','.join(SPELL_COLUMNS) + '\n'
                        + '1,1990,0,,,,,4.0,0,,30,0,,0,Native\n')

        with pytest.raises(SpellSchemaError):
            load_spells(path)

    def test_duplicate_worker_year(self, tmp_path):
        frame = records_to_frame([_spell(1, 1990, 1), _spell(1, 1990, 2)])
        path = write_spells(frame, tmp_path / 'spells.csv')

        with pytest.raises(DuplicateSpellError) as exc:
            load_spells(path)

        assert exc.value.line_number == 3

    def test_wrong_header(self, tmp_path):
        path = tmp_path / 'spells.csv'
        path.write_text('worker,year\n1,1990\n')

        with pytest.raises(SpellSchemaError):
            load_spells(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_spells(tmp_path / 'absent.csv')


class TestSpellHelpers:
    """Main-spell rule and wage bills."""

    def test_main_spell_prefers_full_time(self):
        frame = records_to_frame([
            _spell(1, 1990, 1, hours=HoursBand.PART_UNDER_18, wage=5.0),
            _spell(1, 1990, 2, wage=4.0),
        ])

        kept = select_main_spells(frame)

        assert len(kept) == 1
        assert kept['muni_id'].iat[0] == 2

    def test_main_spell_breaks_ties_by_wage(self):
        frame = records_to_frame([_spell(1, 1990, 1, wage=4.0), _spell(1, 1990, 2, wage=4.5)])

        assert select_main_spells(frame)['muni_id'].iat[0] == 2

    def test_wage_bill(self):
        frame = records_to_frame([
            _spell(1, 1990, 1, wage=math.log(100.0)),
            _spell(2, 1990, 1, wage=math.log(50.0), nationality=Nationality.COMMUTER),
            _spell(3, 1990, 2, wage=math.log(80.0)),
        ])

        bill = wage_bill(frame, {1}, 1990)

        assert bill['total_bill'] == pytest.approx(150.0)
        assert bill['commuter_bill'] == pytest.approx(50.0)
        assert bill['commuter_count'] == 1.0
        assert bill['total_fte'] == pytest.approx(2.0)
