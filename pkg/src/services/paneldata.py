"""Spell ingestion, FTE weighting, transition classification and flow aggregation."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Set, Union

import numpy as np
import pandas as pd

from src.exceptions import (
    DuplicateSpellError,
    InvalidParameterError,
    SpellSchemaError,
    TransitionError,
)
from src.models.simulation import MunicipalitySpec
from src.models.spell import (
    FTE_WEIGHTS,
    MAX_AGE,
    MIN_AGE,
    NON_EMPLOYED,
    SPELL_COLUMNS,
    Education,
    FlowAggregate,
    HoursBand,
    Nationality,
    SpellRecord,
    TaskClass,
    TransitionClass,
    TransitionRecord,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

INT_COLUMNS = ['worker_id', 'year', 'age']
FLAG_COLUMNS = ['employed', 'censored', 'female', 'apprentice']
NULLABLE_INT_COLUMNS = ['muni_id', 'district_id']
CATEGORY_COLUMNS = {
    'task_class': [t.value for t in TaskClass],
    'hours_band': [h.value for h in HoursBand],
    'education': [e.value for e in Education],
    'nationality': [n.value for n in Nationality],
}
FTE_BY_LABEL = {band.value: weight for band, weight in FTE_WEIGHTS.items()}
MUNICIPALITY_COLUMNS = ['muni_id', 'district_id', 'is_border', 'distance_km', 'n_workers0']

_TRUE = {'1', 'true', 'True', 'TRUE'}
_FALSE = {'0', 'false', 'False', 'FALSE'}


def fte_weight(hours_band: Union[HoursBand, str]) -> float:
    """Full-time equivalent weight of an hours band.

    Args:
        hours_band: HoursBand or its label

    Returns:
        1.0, 0.67 or 0.5

    Raises:
        InvalidParameterError: For an unknown band
    """
    if isinstance(hours_band, HoursBand):
        return FTE_WEIGHTS[hours_band]
    try:
        return FTE_BY_LABEL[str(hours_band)]
    except KeyError:
        raise InvalidParameterError(f"Unknown hours band: {hours_band!r}")


def fte_series(frame: pd.DataFrame) -> pd.Series:
    """FTE weight per spell; zero for non-employed records."""
    weights = frame['hours_band'].astype(object).map(FTE_BY_LABEL).astype(float).fillna(0.0)
    return weights.where(frame['employed'], 0.0)


# --- Frames ---------------------------------------------------------------------------


def coerce_spell_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Canonical column order and dtypes of an in-memory spell frame.

    Raises:
        SpellSchemaError: If a column is missing
    """
    missing = [c for c in SPELL_COLUMNS if c not in frame.columns]
    if missing:
        raise SpellSchemaError(f"Spell frame misses columns: {', '.join(missing)}")
    out = pd.DataFrame(index=pd.RangeIndex(len(frame)))
    for col in SPELL_COLUMNS:
        values = frame[col].to_numpy()
        if col in INT_COLUMNS:
            out[col] = values.astype(np.int64)
        elif col in FLAG_COLUMNS:
            out[col] = values.astype(bool)
        elif col in NULLABLE_INT_COLUMNS:
            out[col] = pd.array(pd.Series(values).astype('Float64').round(), dtype='Int64')
        elif col == 'log_daily_wage':
            out[col] = pd.Series(values).astype(float).to_numpy()
        elif col in CATEGORY_COLUMNS:
            series = pd.Series(values, dtype=object)
            series = series.where(series.notna() & (series != ''), None)
            out[col] = pd.Categorical(series, categories=CATEGORY_COLUMNS[col])
        else:
            series = pd.Series(values, dtype=object)
            out[col] = series.where(series.notna() & (series != ''), None).to_numpy()
    return out


def write_spells(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write spells in the canonical CSV layout.

    Flags are written as 0/1, missing values as empty fields and wages with
    round-trip precision.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = coerce_spell_frame(frame)
    out = pd.DataFrame(index=data.index)
    for col in SPELL_COLUMNS:
        if col in FLAG_COLUMNS:
            out[col] = data[col].astype(np.int8)
        elif col == 'log_daily_wage':
            out[col] = [('' if np.isnan(v) else repr(float(v))) for v in data[col].to_numpy()]
        elif col in NULLABLE_INT_COLUMNS:
            out[col] = data[col].astype(object).where(data[col].notna(), '')
        else:
            out[col] = data[col].astype(object).where(data[col].notna(), '')
    out.to_csv(path, index=False, columns=SPELL_COLUMNS)
    logger.info(f"Wrote {len(out)} spells to {path}")
    return path


@dataclass
class LoadReport:
    """Row counts of a spell file load."""

    path: str
    rows_read: int
    rows_kept: int
    dropped_age: int
    employed_rows: int
    censored_rows: int
    workers: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class SpellLoad:
    """Loaded spells plus their row-count report."""

    frame: pd.DataFrame
    report: LoadReport

    def to_records(self) -> List[SpellRecord]:
        return frame_to_records(self.frame)

    def __len__(self) -> int:
        return len(self.frame)


def frame_to_records(frame: pd.DataFrame) -> List[SpellRecord]:
    """Convert a canonical spell frame to SpellRecord objects."""
    records = []
    for row in frame.itertuples(index=False):
        wage = row.log_daily_wage
        records.append(SpellRecord(
            worker_id=int(row.worker_id),
            year=int(row.year),
            employed=bool(row.employed),
            muni_id=None if pd.isna(row.muni_id) else int(row.muni_id),
            district_id=None if pd.isna(row.district_id) else int(row.district_id),
            occupation_code=row.occupation_code,
            task_class=None if pd.isna(row.task_class) else TaskClass(row.task_class),
            log_daily_wage=None if pd.isna(wage) else float(wage),
            censored=bool(row.censored),
            hours_band=None if pd.isna(row.hours_band) else HoursBand(row.hours_band),
            age=int(row.age),
            female=bool(row.female),
            education=None if pd.isna(row.education) else Education(row.education),
            apprentice=bool(row.apprentice),
            nationality=Nationality(row.nationality),
        ))
    return records


def records_to_frame(records: Iterable[SpellRecord]) -> pd.DataFrame:
    """Canonical spell frame from SpellRecord objects."""
    rows = [r.to_dict() for r in records]
    if not rows:
        return coerce_spell_frame(pd.DataFrame({c: [] for c in SPELL_COLUMNS}))
    return coerce_spell_frame(pd.DataFrame(rows, columns=SPELL_COLUMNS))


def _first_bad(mask: np.ndarray) -> Optional[int]:
    hits = np.flatnonzero(mask)
    return None if hits.size == 0 else int(hits[0])


def load_spells(path: PathLike) -> SpellLoad:
    """Load and validate a spell CSV.

    Args:
        path: Spell file with the canonical header

    Returns:
        SpellLoad with records aged 16-65 and a row-count report

    Raises:
        FileNotFoundError: If the file does not exist
        SpellSchemaError: For a malformed row, naming its line number
        DuplicateSpellError: For a repeated (worker_id, year) pair
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Spell file not found: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    if list(raw.columns) != SPELL_COLUMNS:
        raise SpellSchemaError(
            f"header must be {','.join(SPELL_COLUMNS)}, got {','.join(raw.columns)}",
            line_number=1,
        )
    lines = np.arange(len(raw)) + 2

    def fail(mask: np.ndarray, column: str, message: str):
        i = _first_bad(mask)
        if i is not None:
            raise SpellSchemaError(
                f"{column}: {message} (got {raw[column].iat[i]!r})", line_number=int(lines[i])
            )

    parsed: Dict[str, Any] = {}
    for col in INT_COLUMNS:
        numbers = pd.to_numeric(raw[col], errors='coerce')
        fail((numbers.isna() | (numbers != numbers.round())).to_numpy(), col, "expected an integer")
        parsed[col] = numbers.astype(np.int64).to_numpy()
    for col in FLAG_COLUMNS:
        values = raw[col]
        fail((~values.isin(_TRUE | _FALSE)).to_numpy(), col, "expected 0 or 1")
        parsed[col] = values.isin(_TRUE).to_numpy()
    for col in NULLABLE_INT_COLUMNS:
        present = raw[col] != ''
        numbers = pd.to_numeric(raw[col].where(present, None), errors='coerce')
        fail((present & (numbers.isna() | (numbers != numbers.round()))).to_numpy(), col,
             "expected an integer or an empty field")
        parsed[col] = numbers
    wage_present = raw['log_daily_wage'] != ''
    wages = np.full(len(raw), np.nan)
    try:
        wages[wage_present.to_numpy()] = raw.loc[wage_present, 'log_daily_wage'].astype(float)
    except ValueError:
        numbers = pd.to_numeric(raw['log_daily_wage'].where(wage_present, None), errors='coerce')
        fail((wage_present & numbers.isna()).to_numpy(), 'log_daily_wage', "expected a number")
    fail((wage_present.to_numpy() & ~np.isfinite(wages)), 'log_daily_wage',
         "expected a finite number")
    parsed['log_daily_wage'] = wages
    for col, allowed in CATEGORY_COLUMNS.items():
        values = raw[col]
        fail(((values != '') & ~values.isin(allowed)).to_numpy(), col,
             f"expected one of {', '.join(allowed)}")
        parsed[col] = values
    fail((raw['nationality'] == '').to_numpy(), 'nationality', "is required")
    parsed['occupation_code'] = raw['occupation_code']

    employed = parsed['employed']
    muni_present = (raw['muni_id'] != '').to_numpy()
    fail(employed & ~wage_present.to_numpy(), 'log_daily_wage', "employed spell needs a wage")
    fail(employed & ~muni_present, 'muni_id', "employed spell needs a municipality")
    fail(employed & (raw['hours_band'] == '').to_numpy(), 'hours_band',
         "employed spell needs an hours band")
    fail(~employed & wage_present.to_numpy(), 'log_daily_wage',
         "non-employed spell must not carry a wage")
    fail(~employed & muni_present, 'muni_id', "non-employed spell must not carry a municipality")

    keys = pd.DataFrame({'worker_id': parsed['worker_id'], 'year': parsed['year']})
    dup = keys.duplicated(keep='first').to_numpy()
    if dup.any():
        i = int(np.flatnonzero(dup)[0])
        raise DuplicateSpellError(
            int(parsed['worker_id'][i]), int(parsed['year'][i]), line_number=int(lines[i])
        )

    frame = coerce_spell_frame(pd.DataFrame({c: parsed[c] for c in SPELL_COLUMNS}))
    in_window = ((frame['age'] >= MIN_AGE) & (frame['age'] <= MAX_AGE)).to_numpy()
    dropped = int((~in_window).sum())
    if dropped:
        logger.warning(f"Discarded {dropped} spells outside ages {MIN_AGE}-{MAX_AGE}")
    frame = frame.loc[in_window].reset_index(drop=True)

    report = LoadReport(
        path=str(path),
        rows_read=len(raw),
        rows_kept=len(frame),
        dropped_age=dropped,
        employed_rows=int(frame['employed'].sum()),
        censored_rows=int(frame['censored'].sum()),
        workers=int(frame['worker_id'].nunique()),
    )
    logger.info(f"Loaded {report.rows_kept} of {report.rows_read} spells from {path}")
    return SpellLoad(frame=frame, report=report)


def select_main_spells(frame: pd.DataFrame) -> pd.DataFrame:
    """Keep one spell per (worker_id, year): highest FTE, then highest wage.

    Remaining ties keep the first spell in input order.
    """
    data = frame.copy()
    data['_fte'] = fte_series(data)
    data['_wage'] = data['log_daily_wage'].fillna(-np.inf)
    data['_order'] = np.arange(len(data))
    data = data.sort_values(
        ['worker_id', 'year', '_fte', '_wage', '_order'],
        ascending=[True, True, False, False, True],
        kind='mergesort',
    )
    kept = data.drop_duplicates(['worker_id', 'year'], keep='first')
    dropped = len(data) - len(kept)
    if dropped:
        logger.info(f"Main-spell rule removed {dropped} secondary spells")
    kept = kept.drop(columns=['_fte', '_wage', '_order'])
    return kept.sort_values(['worker_id', 'year']).reset_index(drop=True)


# --- Municipalities and panels --------------------------------------------------------


def registry_frame(municipalities: Iterable[MunicipalitySpec]) -> pd.DataFrame:
    """Municipality registry indexed by muni_id."""
    rows = [
        {
            'muni_id': m.muni_id,
            'district_id': m.district_id,
            'is_border': bool(m.is_border),
            'distance_km': np.nan if m.distance_km is None else float(m.distance_km),
            'n_workers0': m.n_workers0,
        }
        for m in municipalities
    ]
    frame = pd.DataFrame(rows, columns=MUNICIPALITY_COLUMNS)
    return frame.set_index('muni_id').sort_index()


def write_municipalities(registry: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = registry.reset_index()[MUNICIPALITY_COLUMNS].copy()
    out['is_border'] = out['is_border'].astype(np.int8)
    out['distance_km'] = [('' if np.isnan(v) else repr(float(v))) for v in out['distance_km']]
    out.to_csv(path, index=False)
    logger.info(f"Wrote {len(out)} municipalities to {path}")
    return path


def load_municipalities(path: PathLike) -> pd.DataFrame:
    """Load the municipality registry.

    Raises:
        FileNotFoundError: If the file does not exist
        SpellSchemaError: If columns are missing or ids repeat
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Municipality file not found: {path}")
    frame = pd.read_csv(path)
    missing = [c for c in MUNICIPALITY_COLUMNS if c not in frame.columns]
    if missing:
        raise SpellSchemaError(f"municipality file misses columns: {', '.join(missing)}", 1)
    dup = frame['muni_id'].duplicated().to_numpy()
    if dup.any():
        i = int(np.flatnonzero(dup)[0])
        raise SpellSchemaError(f"duplicate muni_id {frame['muni_id'].iat[i]}", line_number=i + 2)
    frame['is_border'] = frame['is_border'].astype(bool)
    frame['distance_km'] = frame['distance_km'].astype(float)
    bad = frame['is_border'] & ~(frame['distance_km'] >= 0)
    if bad.any():
        i = int(np.flatnonzero(bad.to_numpy())[0])
        raise SpellSchemaError("border municipality needs distance_km >= 0", line_number=i + 2)
    return frame.set_index('muni_id').sort_index()


@dataclass
class SpellPanel:
    """Spells with their municipality registry and occupation classification.

    Attributes:
        spells: Canonical spell frame
        municipalities: Registry indexed by muni_id (study municipalities)
        occupations: Optional classification indexed by occupation_code with
            task_class and abstract_intensity columns
    """

    spells: pd.DataFrame
    municipalities: pd.DataFrame
    occupations: Optional[pd.DataFrame] = None
    _transitions: Dict[Any, pd.DataFrame] = field(default_factory=dict, repr=False)

    @property
    def study_munis(self) -> Set[int]:
        return set(int(m) for m in self.municipalities.index)

    @property
    def years(self) -> List[int]:
        return sorted(int(y) for y in self.spells['year'].unique())

    def transitions(self, base_year: int, end_year: int) -> pd.DataFrame:
        """Cached build_transitions for the study municipalities."""
        key = (base_year, end_year)
        if key not in self._transitions:
            self._transitions[key] = build_transitions(
                self.spells, base_year, end_year, regions=self.study_munis
            )
        return self._transitions[key]

    def with_spells(self, spells: pd.DataFrame) -> 'SpellPanel':
        """Same registry and classification with replaced spells."""
        return SpellPanel(spells=spells, municipalities=self.municipalities,
                          occupations=self.occupations)


def load_panel(
    spells_path: PathLike,
    municipalities_path: PathLike,
    tasks_path: Optional[PathLike] = None,
) -> SpellPanel:
    """Load spells, registry and (optionally) the task survey into a SpellPanel."""
    from src.services.task_classifier import classify_occupations, load_task_survey

    loaded = load_spells(spells_path)
    registry = load_municipalities(municipalities_path)
    occupations = None
    if tasks_path is not None:
        classification = classify_occupations(load_task_survey(tasks_path))
        occupations = classification.frame
    return SpellPanel(spells=loaded.frame, municipalities=registry, occupations=occupations)


# --- Transitions ----------------------------------------------------------------------


def _location(spell: SpellRecord) -> Union[int, str]:
    if spell.employed and not spell.apprentice and spell.muni_id is not None:
        return int(spell.muni_id)
    return NON_EMPLOYED


def classify_transition(
    spell0: SpellRecord, spell1: SpellRecord, study_region: Optional[int] = None
) -> TransitionRecord:
    """Classify a worker's move between two spells relative to a study region.

    Args:
        spell0: Base-period spell (non-employed and apprentice spells count as
            non-employment)
        spell1: End-period spell
        study_region: Municipality r; defaults to the origin, or the
            destination when the worker is non-employed at base

    Returns:
        TransitionRecord

    Raises:
        TransitionError: For mismatched workers, non-increasing years, or a
            region touched by neither spell
    """
    if spell0.worker_id != spell1.worker_id:
        raise TransitionError(
            f"Spells belong to different workers ({spell0.worker_id} vs {spell1.worker_id})"
        )
    if spell0.year >= spell1.year:
        raise TransitionError(f"Base year {spell0.year} must precede end year {spell1.year}")
    origin = _location(spell0)
    destination = _location(spell1)
    region = study_region
    if region is None:
        region = origin if origin != NON_EMPLOYED else destination
        region = None if region == NON_EMPLOYED else region

    if region is None:
        classification = TransitionClass.NONEMPLOYED_BOTH
    elif origin == region:
        if destination == region:
            classification = TransitionClass.STAYER
        elif destination == NON_EMPLOYED:
            classification = TransitionClass.DISPLACED
        else:
            classification = TransitionClass.RELOCATED
    elif destination == region:
        classification = (TransitionClass.INFLOW_FROM_NONEMP if origin == NON_EMPLOYED
                          else TransitionClass.INFLOW_FROM_OTHER_REGION)
    elif origin == NON_EMPLOYED and destination == NON_EMPLOYED:
        classification = TransitionClass.NONEMPLOYED_BOTH
    else:
        raise TransitionError(
            f"Worker {spell0.worker_id} is in neither period employed in region {region}"
        )

    def wage(spell: SpellRecord, location) -> Optional[float]:
        return spell.log_daily_wage if location != NON_EMPLOYED and spell.is_full_time else None

    return TransitionRecord(
        worker_id=spell0.worker_id,
        base_year=spell0.year,
        end_year=spell1.year,
        region=region,
        origin=origin,
        destination=destination,
        classification=classification,
        task0=spell0.task_class if origin != NON_EMPLOYED else None,
        task1=spell1.task_class if destination != NON_EMPLOYED else None,
        wage0=wage(spell0, origin),
        wage1=wage(spell1, destination),
        fte0=spell0.fte if origin != NON_EMPLOYED else 0.0,
        fte1=spell1.fte if destination != NON_EMPLOYED else 0.0,
    )


STATE_COLUMNS = ['muni_id', 'task_class', 'log_daily_wage', 'hours_band', 'censored', 'age',
                 'female', 'education', 'occupation_code']


def core_spells(frame: pd.DataFrame, year: Optional[int] = None) -> pd.DataFrame:
    """Employed native non-apprentice spells (optionally of one year)."""
    mask = (frame['employed'] & ~frame['apprentice']
            & (frame['nationality'] == Nationality.NATIVE.value))
    if year is not None:
        mask &= frame['year'] == year
    return frame.loc[mask]


def _state(frame: pd.DataFrame, year: int) -> pd.DataFrame:
    spells = core_spells(frame, year)
    state = spells.set_index('worker_id')[STATE_COLUMNS].copy()
    state['fte'] = fte_series(spells).to_numpy()
    full_time = (spells['hours_band'] == HoursBand.FULL_TIME.value).to_numpy()
    state['wage'] = np.where(full_time, spells['log_daily_wage'].to_numpy(), np.nan)
    state['full_time'] = full_time
    state['muni_id'] = state['muni_id'].astype('Int64')
    return state


def build_transitions(
    frame: pd.DataFrame,
    base_year: int,
    end_year: int,
    regions: Optional[Set[int]] = None,
) -> pd.DataFrame:
    """Vectorised classify_transition for every native worker and role.

    A worker moving between two municipalities appears twice: as Relocated
    for the origin and as InflowFromOtherRegion for the destination. Workers
    non-employed in both periods touch no region and are omitted.

    Args:
        frame: Canonical spell frame
        base_year: Base period
        end_year: End period
        regions: Study municipalities; roles for other regions are dropped

    Returns:
        DataFrame with one row per (worker, region) role
    """
    if base_year >= end_year:
        raise TransitionError(f"Base year {base_year} must precede end year {end_year}")
    s0 = _state(frame, base_year).add_suffix('0')
    s1 = _state(frame, end_year).add_suffix('1')
    joined = s0.join(s1, how='outer').sort_index()
    joined.index.name = 'worker_id'
    m0 = joined['muni_id0']
    m1 = joined['muni_id1']
    has0 = m0.notna().to_numpy()
    has1 = m1.notna().to_numpy()
    same = has0 & has1 & (m0.fillna(-1).to_numpy() == m1.fillna(-1).to_numpy())

    base_class = np.where(same, TransitionClass.STAYER.value,
                          np.where(has1, TransitionClass.RELOCATED.value,
                                   TransitionClass.DISPLACED.value))
    base_roles = joined.loc[has0].copy()
    base_roles['region'] = m0[has0].astype(np.int64).to_numpy()
    base_roles['classification'] = base_class[has0]

    entry = has1 & ~same
    end_roles = joined.loc[entry].copy()
    end_roles['region'] = m1[entry].astype(np.int64).to_numpy()
    end_roles['classification'] = np.where(
        has0[entry], TransitionClass.INFLOW_FROM_OTHER_REGION.value,
        TransitionClass.INFLOW_FROM_NONEMP.value,
    )

    roles = pd.concat([base_roles, end_roles]).reset_index()
    if regions is not None:
        roles = roles.loc[roles['region'].isin(regions)]
    gap = end_year - base_year
    age0 = roles['age0'].where(roles['age0'].notna(), roles['age1'] - gap)
    out = pd.DataFrame({
        'worker_id': roles['worker_id'].astype(np.int64).to_numpy(),
        'region': roles['region'].astype(np.int64).to_numpy(),
        'origin': roles['muni_id0'].astype('Int64').array,
        'destination': roles['muni_id1'].astype('Int64').array,
        'classification': roles['classification'].to_numpy(),
        'task0': roles['task_class0'].astype(object).to_numpy(),
        'task1': roles['task_class1'].astype(object).to_numpy(),
        'occupation0': roles['occupation_code0'].astype(object).to_numpy(),
        'occupation1': roles['occupation_code1'].astype(object).to_numpy(),
        'wage0': roles['wage0'].astype(float).to_numpy(),
        'wage1': roles['wage1'].astype(float).to_numpy(),
        'censored0': roles['censored0'].fillna(False).astype(bool).to_numpy(),
        'censored1': roles['censored1'].fillna(False).astype(bool).to_numpy(),
        'fte0': roles['fte0'].fillna(0.0).astype(float).to_numpy(),
        'fte1': roles['fte1'].fillna(0.0).astype(float).to_numpy(),
        'full_time0': roles['full_time0'].fillna(False).astype(bool).to_numpy(),
        'full_time1': roles['full_time1'].fillna(False).astype(bool).to_numpy(),
        'age0': age0.astype(float).to_numpy(),
        'female': roles['female0'].where(roles['female0'].notna(), roles['female1'])
                                  .astype(bool).to_numpy(),
        'education': roles['education0'].astype(object)
                                        .where(roles['education0'].notna(),
                                               roles['education1'].astype(object)).to_numpy(),
    })
    out = out.sort_values(['region', 'worker_id', 'classification'], kind='mergesort')
    logger.debug(f"Built {len(out)} transition roles for {base_year}->{end_year}")
    return out.reset_index(drop=True)


# --- Flow aggregation -----------------------------------------------------------------


@dataclass
class FlowTable:
    """Per-municipality flow aggregates.

    Attributes:
        frame: One row per municipality (index muni_id)
        excluded: Municipalities dropped because E0 = 0
        task_excluded: Per task class, municipalities with zero baseline
            employment in that class
    """

    frame: pd.DataFrame
    excluded: List[int] = field(default_factory=list)
    task_excluded: Dict[str, List[int]] = field(default_factory=dict)

    def records(self) -> List[FlowAggregate]:
        """FlowAggregate objects for every included municipality."""
        out = []
        for muni_id, row in self.frame.iterrows():
            task = {}
            for prefix in ('routine', 'abstract'):
                if f'{prefix}_E0' in row.index:
                    task[prefix] = {k[len(prefix) + 1:]: float(row[k])
                                    for k in row.index if k.startswith(prefix + '_')}
            out.append(FlowAggregate(
                muni_id=int(muni_id),
                E0=float(row['E0']),
                E1=float(row['E1']),
                e_stay=float(row['e_stay']),
                e_exit=float(row['e_exit']),
                e_relocate=float(row['e_relocate']),
                e_inflow=float(row['e_inflow']),
                inflow_nonemp=float(row['inflow_nonemp']),
                inflow_other=float(row['inflow_other']),
                stayer_hours_change=float(row['stayer_hours_change']),
                task=task,
            ))
        return out

    def shares(self) -> pd.DataFrame:
        """Growth and flow shares relative to E0."""
        f = self.frame
        return pd.DataFrame({
            'growth': (f['E1'] - f['E0']) / f['E0'],
            'exit': f['e_exit'] / f['E0'],
            'inflow': f['e_inflow'] / f['E0'],
            'relocate': f['e_relocate'] / f['E0'],
            'inflow_nonemp': f['inflow_nonemp'] / f['E0'],
            'inflow_other': (f['inflow_other'] + f['stayer_hours_change']) / f['E0'],
        }, index=f.index)

    def task_shares(self, prefix: str) -> pd.DataFrame:
        """Task-class growth and its flow components relative to the class E0."""
        f = self.frame
        e0 = f[f'{prefix}_E0']
        keep = e0 > 0
        f, e0 = f.loc[keep], e0.loc[keep]
        return pd.DataFrame({
            'growth': (f[f'{prefix}_E1'] - e0) / e0,
            'exit': f[f'{prefix}_exit'] / e0,
            'inflow': f[f'{prefix}_inflow'] / e0,
            'relocate': f[f'{prefix}_relocate'] / e0,
            'switch_out': f[f'{prefix}_switch_out'] / e0,
            'switch_in': f[f'{prefix}_switch_in'] / e0,
        }, index=f.index)


def _group_sum(values: pd.Series, mask: pd.Series, regions: pd.Series) -> pd.Series:
    return values.where(mask, 0.0).groupby(regions).sum()


def aggregate_flows(transitions: pd.DataFrame, task_split: bool = True) -> FlowTable:
    """FTE-weighted flows per municipality.

    Base-side flows use base FTE, end-side flows end FTE. Stayers are counted
    with base FTE; any change in their hours is folded into e_inflow and
    reported as stayer_hours_change, so E0 = stay + exit + relocate and
    E1 = stay + inflow hold exactly.

    Args:
        transitions: Output of build_transitions
        task_split: Add the routine/abstract split with upgrading and
            downgrading of stayers

    Returns:
        FlowTable
    """
    t = transitions.sort_values(['region', 'worker_id', 'classification'], kind='mergesort')
    region = t['region']
    cls = t['classification']
    fte0, fte1 = t['fte0'], t['fte1']
    is_stay = cls == TransitionClass.STAYER.value
    is_exit = cls == TransitionClass.DISPLACED.value
    is_reloc = cls == TransitionClass.RELOCATED.value
    is_in_ne = cls == TransitionClass.INFLOW_FROM_NONEMP.value
    is_in_or = cls == TransitionClass.INFLOW_FROM_OTHER_REGION.value

    columns = {
        'e_stay': _group_sum(fte0, is_stay, region),
        'e_exit': _group_sum(fte0, is_exit, region),
        'e_relocate': _group_sum(fte0, is_reloc, region),
        'inflow_nonemp': _group_sum(fte1, is_in_ne, region),
        'inflow_other': _group_sum(fte1, is_in_or, region),
        'stayer_hours_change': _group_sum(fte1 - fte0, is_stay, region),
        'stay_end': _group_sum(fte1, is_stay, region),
    }
    frame = pd.DataFrame(columns).fillna(0.0)
    frame['E0'] = frame['e_stay'] + frame['e_exit'] + frame['e_relocate']
    frame['E1'] = frame['stay_end'] + frame['inflow_nonemp'] + frame['inflow_other']
    frame['e_inflow'] = frame['E1'] - frame['e_stay']

    if task_split:
        for prefix, own, other in (('routine', TaskClass.ROUTINE.value, TaskClass.ABSTRACT.value),
                                   ('abstract', TaskClass.ABSTRACT.value, TaskClass.ROUTINE.value)):
            t0_own = t['task0'] == own
            t1_own = t['task1'] == own
            t0_other = t['task0'] == other
            stay_same = _group_sum(fte0, is_stay & t0_own & t1_own, region)
            switch_out = _group_sum(fte0, is_stay & t0_own & ~t1_own, region)
            switch_in = _group_sum(fte0, is_stay & t0_other & t1_own, region)
            exit_ = _group_sum(fte0, is_exit & t0_own, region)
            reloc = _group_sum(fte0, is_reloc & t0_own, region)
            end_own = _group_sum(fte1, (is_stay | is_in_ne | is_in_or) & t1_own, region)
            part = pd.DataFrame({
                'stay_same': stay_same, 'switch_out': switch_out, 'switch_in': switch_in,
                'exit': exit_, 'relocate': reloc, 'E1': end_own,
            }).reindex(frame.index).fillna(0.0)
            frame[f'{prefix}_E0'] = part['stay_same'] + part['switch_out'] + part['exit'] \
                + part['relocate']
            frame[f'{prefix}_E1'] = part['E1']
            frame[f'{prefix}_exit'] = part['exit']
            frame[f'{prefix}_relocate'] = part['relocate']
            frame[f'{prefix}_stay_same'] = part['stay_same']
            frame[f'{prefix}_switch_out'] = part['switch_out']
            frame[f'{prefix}_switch_in'] = part['switch_in']
            frame[f'{prefix}_inflow'] = part['E1'] - part['stay_same'] - part['switch_in']

    frame = frame.drop(columns=['stay_end'])
    zero = frame['E0'] <= 0
    excluded = [int(m) for m in frame.index[zero]]
    if excluded:
        logger.warning(f"Excluded {len(excluded)} municipalities with zero base employment")
    frame = frame.loc[~zero]
    frame.index = frame.index.astype(np.int64)
    frame.index.name = 'muni_id'

    task_excluded: Dict[str, List[int]] = {}
    if task_split:
        for prefix in ('routine', 'abstract'):
            zero_task = frame[f'{prefix}_E0'] <= 0
            task_excluded[prefix] = [int(m) for m in frame.index[zero_task]]
            if task_excluded[prefix]:
                logger.info(f"{len(task_excluded[prefix])} municipalities have no base "
                            f"{prefix} employment")
    return FlowTable(frame=frame, excluded=excluded, task_excluded=task_excluded)


def employment_by_year(frame: pd.DataFrame, regions: Optional[Set[int]] = None) -> pd.DataFrame:
    """FTE-weighted native employment per municipality and year (core spells)."""
    spells = core_spells(frame)
    if regions is not None:
        spells = spells.loc[spells['muni_id'].isin(regions)]
    weights = fte_series(spells)
    return weights.groupby([spells['muni_id'].astype(np.int64), spells['year']]).sum() \
        .unstack('year', fill_value=0.0)


def wage_bill(frame: pd.DataFrame, munis: Set[int], year: int) -> Dict[str, float]:
    """Wage bill and FTE employment of all employed spells in munis and year.

    Returns:
        Dict with total_bill, total_fte, commuter_bill, commuter_count
    """
    spells = frame.loc[frame['employed'] & (frame['year'] == year)
                       & frame['muni_id'].isin(munis)]
    daily = np.exp(spells['log_daily_wage'].to_numpy())
    commuter = (spells['nationality'] == Nationality.COMMUTER.value).to_numpy()
    return {
        'total_bill': float(np.sum(daily)),
        'total_fte': float(fte_series(spells).sum()),
        'commuter_bill': float(np.sum(daily[commuter])),
        'commuter_count': float(commuter.sum()),
    }
