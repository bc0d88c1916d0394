"""Fusion graphs over regression coefficients.

A fusion graph marks which pairs of coefficients may be fused (penalised
towards each other). Three structures are built from the factor attributes of
the coefficients:

- agnostic: every pair is connected.
- lattice: two cells are connected if they share the level of any factor.
- priority: two cells are connected if they share the level of one named
  factor.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from fusionlasso.data.design import Cell
from fusionlasso.utils.misc import load_json, save_json

_logger = logging.getLogger("fusionlasso")

STRUCTURES = ["agnostic", "lattice", "priority"]


@dataclass
class StructureGraph:
    """A weighted fusion graph over p coefficients.

    Parameters
    ----------
    n_coefs : int
        Number of coefficients p.
    edges : list of tuple
        Unordered index pairs. Stored as (i, j) with i < j.
    weights : list of float, optional
        Positive weight for each edge. Default is one.
    quad_groups : list of tuple, optional
        Index sets fused jointly through a quadratic penalty.
    labels : list of str, optional
        Coefficient names.
    """

    n_coefs: int
    edges: list = field(default_factory=list)
    weights: list = None
    quad_groups: list = field(default_factory=list)
    labels: list = None

    def __post_init__(self):
        if self.n_coefs < 1:
            raise ValueError("n_coefs must be one or greater.")
        self.edges = [tuple(sorted((int(i), int(j)))) for i, j in self.edges]
        if self.weights is None:
            self.weights = [1.0] * len(self.edges)
        self.weights = [float(w) for w in self.weights]
        self.quad_groups = [tuple(sorted(int(i) for i in g)) for g in self.quad_groups]
        if self.labels is None:
            self.labels = [str(i) for i in range(self.n_coefs)]
        self.labels = list(self.labels)
        self.validate()

    def validate(self):
        if len(self.weights) != len(self.edges):
            raise ValueError("weights must have one entry per edge.")
        if len(self.labels) != self.n_coefs:
            raise ValueError("labels must have n_coefs entries.")
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on coefficient {i}.")
            if i < 0 or j >= self.n_coefs:
                raise ValueError(f"edge ({i}, {j}) is out of range for p={self.n_coefs}.")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("edges must not contain duplicates.")
        if any(not np.isfinite(w) or w <= 0 for w in self.weights):
            raise ValueError("edge weights must be strictly positive.")
        for group in self.quad_groups:
            if len(group) < 2 or len(set(group)) != len(group):
                raise ValueError("quad_groups must hold at least two distinct indices.")
            if group[0] < 0 or group[-1] >= self.n_coefs:
                raise ValueError(f"quad group {group} is out of range for p={self.n_coefs}.")

    @property
    def n_edges(self):
        return len(self.edges)

    def degree(self):
        """Number of edges at each coefficient."""
        degree = np.zeros(self.n_coefs, dtype=int)
        for i, j in self.edges:
            degree[i] += 1
            degree[j] += 1
        return degree

    def union(self, other):
        """Combine two graphs on the same coefficients.

        Edges present in both keep the weight from :code:`self`.

        Parameters
        ----------
        other : StructureGraph
            Graph to add.

        Returns
        -------
        graph : StructureGraph
            Combined graph.
        """
        if other.n_coefs != self.n_coefs:
            raise ValueError("graphs must have the same number of coefficients.")
        edges = list(self.edges)
        weights = list(self.weights)
        seen = set(edges)
        for edge, weight in zip(other.edges, other.weights):
            if edge not in seen:
                edges.append(edge)
                weights.append(weight)
                seen.add(edge)
        groups = list(self.quad_groups) + [
            g for g in other.quad_groups if g not in self.quad_groups
        ]
        return StructureGraph(self.n_coefs, edges, weights, groups, self.labels)

    def add_quad_group(self, indices):
        """Return a copy with an extra quadratic fusion group."""
        return StructureGraph(
            self.n_coefs,
            self.edges,
            self.weights,
            self.quad_groups + [tuple(indices)],
            self.labels,
        )

    def to_dict(self):
        return {
            "n_coefs": self.n_coefs,
            "labels": self.labels,
            "edges": [[i, j, w] for (i, j), w in zip(self.edges, self.weights)],
            "quad_groups": [list(g) for g in self.quad_groups],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            edges = [(e[0], e[1]) for e in d.get("edges", [])]
            weights = [e[2] if len(e) > 2 else 1.0 for e in d.get("edges", [])]
            labels = d.get("labels")
            n_coefs = d.get("n_coefs", len(labels) if labels is not None else None)
        except (TypeError, IndexError) as e:
            raise ValueError(f"malformed structure: {e}")
        if n_coefs is None:
            raise ValueError("structure must give n_coefs or labels.")
        return cls(n_coefs, edges, weights, d.get("quad_groups", []), labels)

    def save(self, filename):
        save_json(filename, self.to_dict())

    @classmethod
    def load(cls, filename):
        if not Path(filename).exists():
            raise FileNotFoundError(f"{filename} not found.")
        return cls.from_dict(load_json(filename))


def _as_cells(cells):
    out = []
    for i, cell in enumerate(cells):
        if isinstance(cell, Cell):
            out.append(cell)
        elif isinstance(cell, dict):
            label = ":".join(f"{k}={v}" for k, v in cell.items()) or str(i)
            out.append(Cell(i, label, dict(cell)))
        else:
            out.append(Cell(int(cell), str(cell), {}))
    indices = [c.index for c in out]
    if len(set(indices)) != len(indices):
        raise ValueError("cells must have distinct indices.")
    return out


def _graph_from_pairs(cells, connect, n_coefs, labels):
    if n_coefs is None:
        n_coefs = max(c.index for c in cells) + 1
    if labels is None:
        labels = [str(i) for i in range(n_coefs)]
        for c in cells:
            if c.index < n_coefs:
                labels[c.index] = c.label
    edges = [(a.index, b.index) for a, b in combinations(cells, 2) if connect(a, b)]
    return StructureGraph(n_coefs, edges, labels=labels)


def build_agnostic(cells, n_coefs=None, labels=None):
    """Fully connected fusion graph (all groupings are possible).

    Parameters
    ----------
    cells : list of Cell, dict or int
        Coefficients to connect.
    n_coefs : int, optional
        Total number of coefficients p. Defaults to the largest cell index
        plus one.
    labels : list of str, optional
        Labels for all p coefficients.

    Returns
    -------
    graph : StructureGraph
        Graph with all :code:`n * (n - 1) / 2` pairs.
    """
    cells = _as_cells(cells)
    if len(cells) < 2:
        raise ValueError("at least two cells are needed to build a structure.")
    return _graph_from_pairs(cells, lambda a, b: True, n_coefs, labels)


def build_lattice(cells, n_coefs=None, labels=None):
    """Fusion graph connecting cells which share any factor level.

    Parameters
    ----------
    cells : list of Cell or dict
        Coefficients with factor attributes. All cells must carry the same
        factors.
    n_coefs : int, optional
        Total number of coefficients p.
    labels : list of str, optional
        Labels for all p coefficients.

    Returns
    -------
    graph : StructureGraph
        Lattice graph.
    """
    cells = _as_cells(cells)
    if len(cells) < 2:
        raise ValueError("at least two cells are needed to build a structure.")
    keys = set(cells[0].attrs)
    if not keys:
        raise ValueError("cells must carry factor attributes for a lattice structure.")
    for cell in cells[1:]:
        if set(cell.attrs) != keys:
            raise ValueError(
                f"mismatched factor keys: {sorted(keys)} and {sorted(cell.attrs)}."
            )

    def share_any(a, b):
        return any(a.attrs[k] == b.attrs[k] for k in keys)

    return _graph_from_pairs(cells, share_any, n_coefs, labels)


def build_priority(cells, factor, n_coefs=None, labels=None):
    """Fusion graph connecting cells which share the level of one factor.

    Parameters
    ----------
    cells : list of Cell or dict
        Coefficients with factor attributes.
    factor : str
        Name of the prioritised factor.
    n_coefs : int, optional
        Total number of coefficients p.
    labels : list of str, optional
        Labels for all p coefficients.

    Returns
    -------
    graph : StructureGraph
        Priority graph.
    """
    cells = _as_cells(cells)
    if len(cells) < 2:
        raise ValueError("at least two cells are needed to build a structure.")
    for cell in cells:
        if factor not in cell.attrs:
            raise ValueError(f"unknown factor {factor} for cell {cell.label}.")
    return _graph_from_pairs(
        cells, lambda a, b: a.attrs[factor] == b.attrs[factor], n_coefs, labels
    )


def parse_structure_spec(spec):
    """Split a structure spec string.

    Parameters
    ----------
    spec : str
        :code:`'agnostic'`, :code:`'lattice'`, :code:`'priority:<factor>'` or
        :code:`'file:<path>'`.

    Returns
    -------
    kind : str
        Structure kind.
    argument : str or None
        Factor name or path.
    """
    kind, _, argument = spec.partition(":")
    if kind not in STRUCTURES + ["file"]:
        raise ValueError(
            f"structure must be one of {STRUCTURES} or 'file:<path>', got {spec}."
        )
    if kind in ["priority", "file"] and not argument:
        raise ValueError(f"structure '{kind}' needs an argument, e.g. '{kind}:<name>'.")
    return kind, argument or None


def build_structure(design, spec, terms=None):
    """Build a fusion graph over the cells of a design.

    The structure is applied within each term and the graphs are combined.
    Cells of a term with a single categorical factor never share a level, so
    they are always connected agnostically.

    Parameters
    ----------
    design : fusionlasso.data.DesignMatrix
        Design matrix.
    spec : str
        Structure spec, see :code:`parse_structure_spec`.
    terms : list of str, optional
        Terms to structure. Defaults to every term of categorical factors
        with at least two columns.

    Returns
    -------
    graph : StructureGraph
        Fusion graph over all p coefficients.
    """
    kind, argument = parse_structure_spec(spec)
    if kind == "file":
        graph = StructureGraph.load(argument)
        if graph.n_coefs != design.n_coefs:
            raise ValueError(
                f"structure in {argument} has {graph.n_coefs} coefficients, "
                f"the design has {design.n_coefs}."
            )
        return graph

    if terms is None:
        terms = [
            t
            for t in design.terms
            if t != ()
            and len(design.term_indices(t)) >= 2
            and all(c.attrs for c in design.get_cells(t))
        ]
        if kind == "priority":
            terms = [t for t in terms if argument in t]

    graph = StructureGraph(design.n_coefs, labels=design.labels)
    for term in terms:
        cells = design.get_cells(term)
        if kind == "agnostic" or len(cells[0].attrs) == 1:
            sub = build_agnostic(cells, design.n_coefs, design.labels)
        elif kind == "lattice":
            sub = build_lattice(cells, design.n_coefs, design.labels)
        else:
            sub = build_priority(cells, argument, design.n_coefs, design.labels)
        graph = graph.union(sub)

    _logger.info(f"Built {kind} structure with {graph.n_edges} edges over {len(terms)} terms")
    return graph
