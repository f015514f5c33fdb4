"""RMP forms, the RMP-algebra (pushforward / pullback / resolve) and the RMP-tree."""

import copy
import json
from dataclasses import dataclass

import numpy as np

from .numkit import pseudo_inverse_apply


@dataclass
class NaturalRmp:
    """Natural (unresolved) form ``[f, M]``."""

    f: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        self.f = np.atleast_1d(np.asarray(self.f, dtype=float))
        self.M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if self.M.shape != (self.f.size, self.f.size):
            raise ValueError(f"inertia shape {self.M.shape} does not match force dim {self.f.size}")

    @property
    def dim(self):
        return self.f.size

    def __add__(self, other):
        return NaturalRmp(self.f + other.f, self.M + other.M)


@dataclass
class CanonicalRmp:
    """Canonical form ``(a, M)``."""

    a: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.M = np.atleast_2d(np.asarray(self.M, dtype=float))
        if self.M.shape != (self.a.size, self.a.size):
            raise ValueError(f"inertia shape {self.M.shape} does not match acceleration dim {self.a.size}")


class RmpEvaluationError(RuntimeError):
    """Raised when a pass fails; carries the path of the offending node."""

    def __init__(self, path, cause):
        super().__init__(f"{path}: {cause}")
        self.path = path
        self.cause = cause


def pullback(children, dim=None, use_jdot=True):
    """Combine child RMPs ``(NaturalRmp, J, Jdot xdot)`` into the parent's natural form.

    ``f = sum J^T (f_i - M_i Jdot_i xdot)``, ``M = sum J^T M_i J``.  No inversion happens here.
    """
    if dim is None:
        if not children:
            raise ValueError("pullback of an empty child list needs an explicit dim")
        dim = np.atleast_2d(children[0][1]).shape[1]
    f = np.zeros(dim)
    M = np.zeros((dim, dim))
    for rmp, J, jdot in children:
        J = np.atleast_2d(J)
        if J.shape != (rmp.dim, dim):
            raise ValueError(f"Jacobian shape {J.shape} incompatible with child dim {rmp.dim} "
                             f"and parent dim {dim}")
        fi = rmp.f - rmp.M @ jdot if use_jdot else rmp.f
        f += J.T @ fi
        M += J.T @ rmp.M @ J
    return NaturalRmp(f, M)


def resolve(rmp):
    """``[f, M] -> (M^+ f, M)``."""
    return CanonicalRmp(pseudo_inverse_apply(rmp.M, rmp.f), rmp.M)


def least_squares_reference(children, dim):
    """Solve ``argmin_a 1/2 sum |J_i a + Jdot_i xdot - a_i|^2_{M_i}`` directly.

    ``children`` are ``(CanonicalRmp, J, Jdot xdot)``.  Used by verification only.
    """
    H = np.zeros((dim, dim))
    g = np.zeros(dim)
    for rmp, J, jdot in children:
        J = np.atleast_2d(J)
        if J.shape != (rmp.a.size, dim):
            raise ValueError(f"Jacobian shape {J.shape} incompatible with child/parent dims")
        # normal equations of the weighted residual J a - (a_i - Jdot xdot)
        H += J.T @ rmp.M @ J
        g += J.T @ rmp.M @ (rmp.a - jdot)
    return pseudo_inverse_apply(H, g)


class RmpNode:
    """A node of the RMP-tree.

    ``edge`` is the task map from the parent's coordinates (``None`` at the root);
    exactly the leaves carry a ``leaf`` policy exposing ``natural_rmp(x, xdot)``.
    """

    def __init__(self, name, edge=None, leaf=None, children=None):
        self.name = name
        self.edge = edge
        self.leaf = leaf
        self.children = list(children or [])
        self.transient = {}
        self.parent = None
        for c in self.children:
            c.parent = self

    def add_child(self, child):
        if self.leaf is not None:
            raise ValueError(f"{self.name} is a leaf and cannot have children")
        child.parent = self
        self.children.append(child)
        return child

    def add(self, name, edge, leaf=None):
        """Create and attach a child; returns it."""
        return self.add_child(RmpNode(name, edge=edge, leaf=leaf))

    @property
    def is_leaf(self):
        return not self.children

    @property
    def path(self):
        parts = []
        node = self
        while node is not None:
            parts.append(node.name)
            node = node.parent
        return "/".join(reversed(parts))

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self):
        return [n for n in self.walk() if n.is_leaf]


def pushforward(node, x, xdot):
    """Forward pass from ``node`` whose own state is ``(x, xdot)``.

    Stores ``x, xdot`` on the node and each child's ``(y, ydot, J, Jdot xdot)`` in its transient.
    """
    node.transient = {"x": x, "xdot": xdot}
    for child in node.children:
        try:
            y, yd, J, jdot = child.edge.apply(x, xdot)
        except RmpEvaluationError:
            raise
        except Exception as exc:
            raise RmpEvaluationError(child.path, exc) from exc
        pushforward(child, y, yd)
        child.transient["J"] = J
        child.transient["jdot"] = jdot


def _backward(node, use_jdot):
    x = node.transient["x"]
    xdot = node.transient["xdot"]
    if node.is_leaf:
        if node.leaf is None:
            raise RmpEvaluationError(node.path, "leaf node without a policy")
        try:
            rmp = node.leaf.natural_rmp(x, xdot)
        except Exception as exc:
            raise RmpEvaluationError(node.path, exc) from exc
    else:
        parts = [(_backward(c, use_jdot), c.transient["J"], c.transient["jdot"]) for c in node.children]
        rmp = pullback(parts, dim=x.size, use_jdot=use_jdot)
    node.transient["rmp"] = rmp
    return rmp


class RmpTree:
    """RMP-tree rooted at the configuration space of dimension ``dim``.

    ``use_jdot=False`` drops the ``Jdot xdot`` correction in every pullback (ablation).
    """

    def __init__(self, dim, root=None, use_jdot=True):
        self.dim = int(dim)
        self.root = root if root is not None else RmpNode("root")
        self.use_jdot = use_jdot

    def add(self, name, edge, leaf=None):
        return self.root.add(name, edge, leaf)

    def clone(self):
        return copy.deepcopy(self)

    def leaves(self):
        return self.root.leaves()

    def _check_state(self, q, qdot):
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        if q.shape != (self.dim,) or qdot.shape != (self.dim,):
            raise ValueError(f"state must have dim {self.dim}, got {q.shape}, {qdot.shape}")
        return q, qdot

    def forward(self, q, qdot):
        q, qdot = self._check_state(q, qdot)
        pushforward(self.root, q, qdot)

    def backward(self):
        if "x" not in self.root.transient:
            raise RuntimeError("backward pass requested before a forward pass")
        return _backward(self.root, self.use_jdot)

    def evaluate(self, q, qdot, keep_transient=False):
        """Two-pass policy evaluation; returns ``(qddot, root NaturalRmp)``."""
        self.forward(q, qdot)
        root_rmp = self.backward()
        qdd = resolve(root_rmp).a
        if not keep_transient:
            for n in self.root.walk():
                n.transient = {}
        return qdd, root_rmp

    __call__ = evaluate

    def leaf_states(self, q, qdot):
        """Forward pass only; returns ``[(leaf node, y, ydot)]``."""
        self.forward(q, qdot)
        out = [(n, n.transient["x"], n.transient["xdot"]) for n in self.root.leaves()]
        for n in self.root.walk():
            n.transient = {}
        return out

    def energy(self, q, qdot):
        """Kinetic energy, potential and dissipation ``qdot^T B qdot`` of the pulled-back GDS.

        ``qdot^T J^T G J qdot`` equals ``ydot^T G ydot``, so no pullback of G is needed.
        Potential is ``None`` when some leaf exposes no potential value.
        """
        K = 0.0
        phi = 0.0
        diss = 0.0
        for node, y, yd in self.leaf_states(q, qdot):
            leaf = node.leaf
            K += 0.5 * yd @ leaf.metric(y, yd) @ yd
            diss += yd @ leaf.damping(y, yd) @ yd
            pv = getattr(leaf, "potential_value", None)
            if pv is None or phi is None:
                phi = None
            else:
                phi += float(pv(y))
        return K, phi, diss

    def dump(self, q, qdot):
        """Per-node states and natural RMPs for one evaluation, as plain dicts."""
        qdd, _ = self.evaluate(q, qdot, keep_transient=True)
        nodes = []
        for n in self.root.walk():
            t = n.transient
            nodes.append({
                "path": n.path,
                "x": t["x"].tolist(),
                "xdot": t["xdot"].tolist(),
                "f": t["rmp"].f.tolist(),
                "M": t["rmp"].M.tolist(),
            })
        for n in self.root.walk():
            n.transient = {}
        return {"qddot": qdd.tolist(), "nodes": nodes}

    def dump_json(self, q, qdot):
        return json.dumps(self.dump(q, qdot), indent=2)
