"""Expansion of factorial and interaction designs into design matrices.

A formula combines column names with three operators:

- :code:`A + B` includes the terms of both sides.
- :code:`A : B` is the interaction (product) of every term on the left with
  every term on the right.
- :code:`A * B` is shorthand for :code:`A + B + A : B`.

:code:`:` binds tightest, then :code:`*`, then :code:`+`. Parentheses group
and names containing spaces or operators can be quoted with backticks, e.g.
:code:`Type * (Money + Stage + \`Co Sponsor\`)`.
"""

import logging
import re
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import pandas as pd

from fusionlasso.array_ops import get_one_hot

_logger = logging.getLogger("fusionlasso")

INTERCEPT = "(Intercept)"

_TOKEN = re.compile(r"\s*(?:(`[^`]+`)|([A-Za-z_][A-Za-z0-9_.\-]*)|([+*:()]))")


@dataclass(frozen=True)
class Cell:
    """A coefficient available for structure building.

    Parameters
    ----------
    index : int
        Column index in the design matrix.
    label : str
        Human readable name.
    attrs : dict
        Factor to level map of the column.
    """

    index: int
    label: str
    attrs: dict = field(default_factory=dict, hash=False)


@dataclass
class DesignMatrix:
    """A labelled design matrix.

    Parameters
    ----------
    values : np.ndarray
        Design matrix. Shape is (N, p).
    labels : list of str
        Coefficient names.
    cell_attrs : list of dict
        Factor to level map for each column.
    column_terms : list of tuple
        Term (tuple of factor names) each column belongs to. The intercept
        belongs to the empty term.
    """

    values: np.ndarray
    labels: list
    cell_attrs: list
    column_terms: list

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be 2D.")
        p = self.values.shape[1]
        if not (len(self.labels) == len(self.cell_attrs) == len(self.column_terms) == p):
            raise ValueError("labels, cell_attrs and column_terms must have p entries.")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_coefs(self):
        return self.values.shape[1]

    @property
    def terms(self):
        """Expanded terms in column order."""
        terms = []
        for term in self.column_terms:
            if term not in terms:
                terms.append(term)
        return terms

    def term_indices(self, term):
        """Column indices of a term.

        Parameters
        ----------
        term : str or tuple of str
            Term, e.g. :code:`"Type:Money"` or :code:`("Money", "Type")`.

        Returns
        -------
        indices : list of int
            Column indices.
        """
        term = parse_term(term)
        indices = [i for i, t in enumerate(self.column_terms) if t == term]
        if not indices:
            raise ValueError(
                f"term {':'.join(term)} is not in the design. "
                f"Terms are {[':'.join(t) for t in self.terms]}."
            )
        return indices

    def get_cells(self, term=None):
        """Cells (coefficients with factor attributes) of a term.

        Parameters
        ----------
        term : str or tuple of str, optional
            Term to select. If :code:`None`, all non-intercept columns are
            returned.

        Returns
        -------
        cells : list of Cell
            Cells in column order.
        """
        if term is None:
            indices = [i for i, t in enumerate(self.column_terms) if t != ()]
        else:
            indices = self.term_indices(term)
        return [Cell(i, self.labels[i], dict(self.cell_attrs[i])) for i in indices]

    def to_frame(self):
        """Design matrix as a labelled DataFrame."""
        return pd.DataFrame(self.values, columns=self.labels)


def _tokenize(formula):
    tokens = []
    pos = 0
    formula = formula.strip()
    while pos < len(formula):
        match = _TOKEN.match(formula, pos)
        if match is None:
            raise ValueError(f"cannot parse formula at: {formula[pos:]!r}")
        quoted, name, op = match.groups()
        if quoted is not None:
            tokens.append(("name", quoted[1:-1]))
        elif name is not None:
            tokens.append(("name", name))
        else:
            tokens.append(("op", op))
        pos = match.end()
    return tokens


class _Parser:
    """Recursive descent parser returning a list of terms."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, op=None):
        token = self.peek()
        if token is None or (op is not None and token != ("op", op)):
            raise ValueError(f"expected {op or 'a name'} in formula.")
        self.pos += 1
        return token

    def parse(self):
        terms = self.expr()
        if self.peek() is not None:
            raise ValueError(f"unexpected {self.peek()[1]!r} in formula.")
        return terms

    def expr(self):
        terms = self.crossed()
        while self.peek() == ("op", "+"):
            self.take("+")
            terms = _union(terms, self.crossed())
        return terms

    def crossed(self):
        terms = self.interaction()
        while self.peek() == ("op", "*"):
            self.take("*")
            right = self.interaction()
            terms = _union(_union(terms, right), _interact(terms, right))
        return terms

    def interaction(self):
        terms = self.atom()
        while self.peek() == ("op", ":"):
            self.take(":")
            terms = _interact(terms, self.atom())
        return terms

    def atom(self):
        token = self.peek()
        if token == ("op", "("):
            self.take("(")
            terms = self.expr()
            self.take(")")
            return terms
        kind, value = self.take()
        if kind != "name":
            raise ValueError(f"unexpected {value!r} in formula.")
        return [frozenset([value])]


def _union(left, right):
    return left + [t for t in right if t not in left]


def _interact(left, right):
    out = []
    for a, b in product(left, right):
        term = a | b
        if term not in out:
            out.append(term)
    return out


def parse_term(term):
    """Canonical form of a single term.

    Parameters
    ----------
    term : str or tuple of str
        E.g. :code:`"Type:Money"`.

    Returns
    -------
    term : tuple of str
        Sorted factor names.
    """
    if isinstance(term, str):
        term = [t.strip().strip("`") for t in term.split(":")]
    return tuple(sorted(set(term)))


def parse_formula(formula):
    """Parse a formula into its terms.

    Parameters
    ----------
    formula : str
        Formula, e.g. :code:`"Type * Money"`.

    Returns
    -------
    terms : list of tuple of str
        Terms sorted by order then lexicographically. Factor names inside a
        term are sorted.
    """
    if not isinstance(formula, str) or not formula.strip():
        raise ValueError("formula must be a non-empty string.")
    terms = _Parser(_tokenize(formula)).parse()
    terms = [tuple(sorted(t)) for t in terms]
    return sorted(set(terms), key=lambda t: (len(t), t))


def _factor_levels(data, name):
    kind = data.kind(name)
    if kind == "categorical":
        return list(data.levels[name])
    if kind == "binary":
        return ["0", "1"]
    return None


def _factor_codes(data, name, levels):
    values = data.frame[name].astype(str).to_numpy()
    codes = {level: i for i, level in enumerate(levels)}
    return np.array([codes[v] for v in values], dtype=int)


def expand_design(data, spec, intercept=True):
    """Expand a dataset into a labelled design matrix.

    Categorical factors are one-hot encoded with one column per level (no
    baseline is dropped). Interaction columns are products of the indicator
    columns (and numeric columns) of their factors.

    Parameters
    ----------
    data : fusionlasso.data.Dataset
        Dataset.
    spec : str or list of tuple
        Formula or parsed terms.
    intercept : bool, optional
        Whether to add a first column labelled :code:`(Intercept)`.

    Returns
    -------
    design : DesignMatrix
        The design matrix.
    """
    terms = parse_formula(spec) if isinstance(spec, str) else [parse_term(t) for t in spec]
    terms = sorted(set(terms), key=lambda t: (len(t), t))

    for term in terms:
        for name in term:
            if name not in data:
                raise ValueError(
                    f"factor {name} is not in the data. Columns are "
                    f"{data.covariate_names()}."
                )
            if name == data.outcome:
                raise ValueError(f"the outcome {name} cannot be used as a factor.")

    n = len(data)
    columns = []
    labels = []
    cell_attrs = []
    column_terms = []
    if intercept:
        columns.append(np.ones(n))
        labels.append(INTERCEPT)
        cell_attrs.append({})
        column_terms.append(())

    for term in terms:
        categorical = []
        numeric = np.ones(n)
        for name in term:
            levels = _factor_levels(data, name)
            if levels is None:
                numeric = numeric * data.frame[name].to_numpy(dtype=float)
            else:
                one_hot = get_one_hot(_factor_codes(data, name, levels), len(levels))
                categorical.append((name, levels, one_hot))

        if not categorical:
            columns.append(numeric)
            labels.append(":".join(term))
            cell_attrs.append({})
            column_terms.append(term)
            continue

        level_indices = [range(len(levels)) for _, levels, _ in categorical]
        for combination in product(*level_indices):
            column = numeric.copy()
            attrs = {}
            for (name, levels, one_hot), j in zip(categorical, combination):
                column = column * one_hot[:, j]
                attrs[name] = levels[j]
            parts = [
                f"{name}={attrs[name]}" if name in attrs else name for name in term
            ]
            columns.append(column)
            labels.append(":".join(parts))
            cell_attrs.append(attrs)
            column_terms.append(term)

    values = np.column_stack(columns) if columns else np.empty((n, 0))
    _logger.debug(f"Expanded design with {values.shape[1]} columns")
    return DesignMatrix(values, labels, cell_attrs, column_terms)
