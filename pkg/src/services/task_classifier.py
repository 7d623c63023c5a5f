"""Classify occupations as routine or abstract from a task survey."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.exceptions import InvalidParameterError, SpellSchemaError
from src.models.spell import TaskClass

logger = logging.getLogger(__name__)

SURVEY_COLUMNS = ['individual_id', 'occupation_code', 'n_routine_tasks', 'n_abstract_tasks']


def task_indices(n_routine: int, n_abstract: int) -> Tuple[float, float]:
    """Routine and abstract task indices of one surveyed individual.

    Raises:
        InvalidParameterError: If counts are negative or both zero
    """
    if n_routine < 0 or n_abstract < 0:
        raise InvalidParameterError("Task counts must be non-negative")
    total = n_routine + n_abstract
    if total == 0:
        raise InvalidParameterError("Individual reports no tasks")
    return n_routine / total, n_abstract / total


@dataclass
class OccupationClassification:
    """Occupation task classes.

    Attributes:
        frame: Indexed by occupation_code with task_class, routine_index,
            abstract_intensity, n_individuals and tie columns
        unclassified: Expected occupations without surveyed individuals
    """

    frame: pd.DataFrame
    unclassified: List[str] = field(default_factory=list)

    def task_of(self, code: str) -> TaskClass:
        return TaskClass(self.frame.at[code, 'task_class'])

    @property
    def ties(self) -> List[str]:
        return list(self.frame.index[self.frame['tie']])


def classify_occupations(
    survey: pd.DataFrame, expected_codes: Optional[Iterable[str]] = None
) -> OccupationClassification:
    """Assign each occupation the task class with the larger mean index.

    Ties go to Routine and are flagged. Abstract intensity is the mean
    abstract index of the occupation's individuals.

    Args:
        survey: Rows with occupation_code, n_routine_tasks, n_abstract_tasks
        expected_codes: Occupations that should be classified; those without
            surveyed individuals are reported as unclassified

    Returns:
        OccupationClassification
    """
    routine = survey['n_routine_tasks'].to_numpy(dtype=float)
    abstract = survey['n_abstract_tasks'].to_numpy(dtype=float)
    total = routine + abstract
    if np.any(routine < 0) or np.any(abstract < 0):
        raise InvalidParameterError("Task counts must be non-negative")
    valid = total > 0
    if not valid.all():
        logger.warning(f"Ignored {int((~valid).sum())} survey rows without tasks")
    indices = pd.DataFrame({
        'occupation_code': survey['occupation_code'].to_numpy()[valid],
        'routine_index': routine[valid] / total[valid],
        'abstract_index': abstract[valid] / total[valid],
    })
    grouped = indices.groupby('occupation_code', sort=True)
    frame = pd.DataFrame({
        'routine_index': grouped['routine_index'].mean(),
        'abstract_intensity': grouped['abstract_index'].mean(),
        'n_individuals': grouped.size(),
    })
    frame['tie'] = np.isclose(frame['routine_index'], frame['abstract_intensity'],
                              rtol=0.0, atol=1e-12)
    frame['task_class'] = np.where(
        frame['abstract_intensity'] > frame['routine_index'] + 1e-12,
        TaskClass.ABSTRACT.value, TaskClass.ROUTINE.value,
    )
    if frame['tie'].any():
        logger.info(f"{int(frame['tie'].sum())} occupations tied; classified as Routine")

    unclassified: List[str] = []
    if expected_codes is not None:
        unclassified = sorted(set(expected_codes) - set(frame.index))
        if unclassified:
            logger.warning(f"{len(unclassified)} occupations have no surveyed individuals")
    return OccupationClassification(frame=frame, unclassified=unclassified)


def apply_classification(spells: pd.DataFrame,
                         classification: OccupationClassification) -> pd.DataFrame:
    """Overwrite spell task classes from an occupation classification.

    Spells of unclassified occupations keep their recorded class.
    """
    out = spells.copy()
    mapped = out['occupation_code'].map(classification.frame['task_class'])
    known = mapped.notna() & out['employed']
    categories = out['task_class'].cat.categories if hasattr(out['task_class'], 'cat') else None
    values = out['task_class'].astype(object).where(~known, mapped)
    out['task_class'] = pd.Categorical(values, categories=categories) if categories is not None \
        else values
    return out


def write_task_survey(survey: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    survey[SURVEY_COLUMNS].to_csv(path, index=False)
    logger.info(f"Wrote {len(survey)} task survey rows to {path}")
    return path


def load_task_survey(path: Union[str, Path]) -> pd.DataFrame:
    """Load a task survey CSV.

    Raises:
        FileNotFoundError: If the file does not exist
        SpellSchemaError: If required columns are missing
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Task survey not found: {path}")
    survey = pd.read_csv(path, dtype={'occupation_code': str})
    missing = [c for c in SURVEY_COLUMNS if c not in survey.columns]
    if missing:
        raise SpellSchemaError(f"task survey misses columns: {', '.join(missing)}", 1)
    return survey
