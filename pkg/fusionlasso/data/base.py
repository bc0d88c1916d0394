"""Base class for handling tabular data.

"""

import logging

import numpy as np
import pandas as pd

from fusionlasso.data import rw

_logger = logging.getLogger("fusionlasso")

COLUMN_KINDS = ["numeric", "categorical", "binary", "count"]

# Outcome kinds each likelihood family accepts
FAMILY_OUTCOMES = {
    "linear": ["numeric", "count"],
    "logistic": ["binary"],
    "multinomial": ["categorical", "binary"],
}


class Dataset:
    """Tabular data with declared column kinds.

    Parameters
    ----------
    frame : pd.DataFrame
        N records of named columns.
    columns : dict
        Column kinds. Values are one of :code:`'numeric'`,
        :code:`'categorical'`, :code:`'binary'`, :code:`'count'` or a dict
        :code:`{"kind": ..., "levels": [...]}` declaring the levels of a
        categorical column. Columns not listed are inferred: numeric dtypes
        are :code:`'numeric'`, everything else :code:`'categorical'`.
    outcome : str, optional
        Name of the outcome column.
    family : str, optional
        Likelihood family: :code:`'linear'`, :code:`'logistic'` or
        :code:`'multinomial'`.
    reference : str, optional
        Reference level of a multinomial outcome. Defaults to the last level.
    """

    def __init__(self, frame, columns=None, outcome=None, family=None, reference=None):
        if not isinstance(frame, pd.DataFrame):
            raise ValueError("frame must be a pandas DataFrame.")
        if len(frame) < 1:
            raise ValueError("frame must contain at least one row.")

        self.frame = frame.reset_index(drop=True).copy()
        self.kinds = {}
        self.levels = {}
        self._parse_columns(columns or {})

        self.outcome = outcome
        self.family = family
        self.reference = reference
        self.validate_outcome()

    @classmethod
    def from_csv(cls, filename, config):
        """Load a dataset from a CSV file and a sidecar config.

        Parameters
        ----------
        filename : str
            Path to the CSV file.
        config : str or dict
            Path to the JSON/YAML sidecar, or the loaded dict. Keys used here
            are :code:`columns`, :code:`outcome`, :code:`family` and
            :code:`reference`.

        Returns
        -------
        data : Dataset
            The dataset.
        """
        config = rw.load_sidecar(config)
        frame = rw.load_csv(filename)
        return cls(
            frame,
            columns=config.get("columns"),
            outcome=config.get("outcome"),
            family=config.get("family"),
            reference=config.get("reference"),
        )

    def __len__(self):
        return len(self.frame)

    def __contains__(self, name):
        return name in self.kinds

    def __repr__(self):
        return (
            f"Dataset(n_rows={len(self)}, columns={list(self.kinds)}, "
            f"outcome={self.outcome}, family={self.family})"
        )

    @property
    def n_rows(self):
        return len(self.frame)

    def _parse_columns(self, columns):
        unknown = [name for name in columns if name not in self.frame.columns]
        if unknown:
            raise ValueError(f"columns {unknown} are not in the data.")

        for name in self.frame.columns:
            spec = columns.get(name)
            declared_levels = None
            if isinstance(spec, dict):
                declared_levels = spec.get("levels")
                spec = spec.get("kind", "categorical")
            if spec is None:
                if pd.api.types.is_numeric_dtype(self.frame[name]):
                    spec = "numeric"
                else:
                    spec = "categorical"
            if spec not in COLUMN_KINDS:
                raise ValueError(f"kind of column {name} must be one of {COLUMN_KINDS}.")
            self.kinds[name] = spec

            if self.frame[name].isna().any():
                raise ValueError(f"column {name} contains missing values.")

            if spec == "categorical":
                values = self.frame[name].astype(str)
                self.frame[name] = values
                observed = sorted(values.unique())
                if declared_levels is not None:
                    declared_levels = [str(level) for level in declared_levels]
                    if len(declared_levels) == 0:
                        raise ValueError(f"column {name} has an empty level set.")
                    missing = sorted(set(observed) - set(declared_levels))
                    if missing:
                        raise ValueError(
                            f"column {name} has values {missing} outside its "
                            "declared levels."
                        )
                    levels = sorted(set(declared_levels))
                else:
                    levels = observed
                if len(levels) == 0:
                    raise ValueError(f"column {name} has an empty level set.")
                self.levels[name] = levels

            elif spec in ["numeric", "count"]:
                self.frame[name] = pd.to_numeric(self.frame[name])
                if spec == "count" and (
                    (self.frame[name] < 0).any()
                    or not np.all(np.mod(self.frame[name], 1) == 0)
                ):
                    raise ValueError(f"count column {name} must hold non-negative integers.")

            elif spec == "binary":
                values = pd.to_numeric(self.frame[name])
                if not values.isin([0, 1]).all():
                    raise ValueError(f"binary column {name} must only contain 0 and 1.")
                self.frame[name] = values.astype(int)

    def validate_outcome(self):
        if self.outcome is None:
            return
        if self.outcome not in self.kinds:
            raise ValueError(f"outcome column {self.outcome} is not in the data.")
        if self.family is None:
            raise ValueError("family must be passed with an outcome.")
        if self.family not in FAMILY_OUTCOMES:
            raise ValueError(f"family must be one of {list(FAMILY_OUTCOMES)}.")
        kind = self.kinds[self.outcome]
        if kind not in FAMILY_OUTCOMES[self.family]:
            raise ValueError(
                f"outcome {self.outcome} is {kind}, which does not match "
                f"family {self.family}."
            )
        if self.family == "multinomial":
            levels = self.outcome_levels()
            if len(levels) < 2:
                raise ValueError("a multinomial outcome needs at least two levels.")
            if self.reference is not None and str(self.reference) not in levels:
                raise ValueError(f"reference must be one of {levels}.")

    def kind(self, name):
        """Kind of a column."""
        if name not in self.kinds:
            raise ValueError(f"{name} is not a column. Columns are {list(self.kinds)}.")
        return self.kinds[name]

    def outcome_levels(self):
        """Category order used for a multinomial outcome.

        The reference level is moved to the end.

        Returns
        -------
        levels : list of str
            Outcome levels.
        """
        if self.kinds[self.outcome] == "binary":
            levels = ["0", "1"]
        else:
            levels = list(self.levels[self.outcome])
        if self.reference is not None:
            levels.remove(str(self.reference))
            levels.append(str(self.reference))
        return levels

    def outcome_array(self):
        """Outcome encoded for the likelihood family.

        Returns
        -------
        y : np.ndarray
            Float values for :code:`linear`, 0/1 integers for
            :code:`logistic` and category codes :code:`0, ..., C-1` (reference
            last) for :code:`multinomial`. Shape is (N,).
        """
        if self.outcome is None:
            raise ValueError("the dataset has no outcome column.")
        values = self.frame[self.outcome]
        if self.family == "linear":
            return values.to_numpy(dtype=float)
        if self.family == "logistic":
            return values.to_numpy(dtype=int)
        levels = self.outcome_levels()
        codes = {level: i for i, level in enumerate(levels)}
        return np.array([codes[str(v)] for v in values], dtype=int)

    def covariate_names(self):
        """Names of all columns except the outcome."""
        return [name for name in self.kinds if name != self.outcome]
