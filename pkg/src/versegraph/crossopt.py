"""Cross-domain resource allocation.

Each domain k holds a scalar allocation R_k scored by a sigmoid utility
U_k(R_k) = 1/(1 + exp(-gamma_k (R_k - lambda_k))).  Domains interact through
shared links (capacity constraints and a flow-product term), shared nodes
(an energy-product term), and a direct utility-coupling term.  The coupled
objective subtracts these interaction penalties over the coupling graph's
edges; the isolated objective ignores them (and the link constraints), which
is exactly what makes its optimum infeasible when domains contend for a link.

Flows are linear in the allocation: f_{l,k}(R_k) = a_{l,k} * R_k with
per-link routing coefficients a.  Transmission energy scales with distance
squared; reception energy is distance-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SnapshotView
from .errors import InfeasibleError, ValidationError


@dataclass(frozen=True)
class DomainSpec:
    id: str
    gamma: float
    lam: float
    r_min: float
    r_max: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValidationError(f"domain {self.id}: gamma must be > 0")
        if self.r_min >= self.r_max:
            raise ValidationError(f"domain {self.id}: r_min must be < r_max")


@dataclass(frozen=True)
class SharedLink:
    id: str
    capacity: float
    coeffs: dict[str, float]  # domain id -> a_{l,k} >= 0

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValidationError(f"link {self.id}: capacity must be > 0")
        for k, a in self.coeffs.items():
            if a < 0:
                raise ValidationError(f"link {self.id}: coefficient for {k} must be >= 0")


@dataclass(frozen=True)
class SharedNode:
    id: str
    eps_tx: float
    eps_rx: float
    incident: dict[str, float]  # link id -> distance

    def __post_init__(self):
        if self.eps_tx < 0 or self.eps_rx < 0:
            raise ValidationError(f"node {self.id}: energy coefficients must be >= 0")
        for l, d in self.incident.items():
            if d <= 0:
                raise ValidationError(f"node {self.id}: distance to {l} must be > 0")


@dataclass(frozen=True)
class CouplingEdge:
    m: str
    n: str
    utility: bool = False
    w_link: float = 1.0
    w_energy: float = 1.0
    w_util: float = 1.0
    sign: float = 1.0  # +1 subtracts phi as a penalty; -1 reverses
    shared_links: tuple[str, ...] = ()
    shared_nodes: tuple[str, ...] = ()

    def pair(self) -> frozenset[str]:
        return frozenset((self.m, self.n))


@dataclass
class Scenario:
    domains: list[DomainSpec]
    links: list[SharedLink] = field(default_factory=list)
    nodes: list[SharedNode] = field(default_factory=list)
    coupling: list[CouplingEdge] = field(default_factory=list)

    def __post_init__(self):
        ids = [d.id for d in self.domains]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate domain ids")
        known = set(ids)
        for l in self.links:
            unknown = set(l.coeffs) - known
            if unknown:
                raise ValidationError(f"link {l.id} references unknown domains {sorted(unknown)}")
        link_ids = {l.id for l in self.links}
        for nd in self.nodes:
            missing = set(nd.incident) - link_ids
            if missing:
                raise ValidationError(f"node {nd.id} references unknown links {sorted(missing)}")
        for e in self.coupling:
            if e.m not in known or e.n not in known or e.m == e.n:
                raise ValidationError(f"bad coupling edge ({e.m}, {e.n})")

    @property
    def domain_ids(self) -> list[str]:
        return [d.id for d in self.domains]

    def _maps(self):
        if not hasattr(self, "_cache"):
            self._cache = (
                {d.id: i for i, d in enumerate(self.domains)},
                {d.id: d for d in self.domains},
                {l.id: l for l in self.links},
            )
        return self._cache

    def domain(self, did: str) -> DomainSpec:
        try:
            return self._maps()[1][did]
        except KeyError:
            raise ValidationError(f"unknown domain {did}") from None

    def index(self, did: str) -> int:
        try:
            return self._maps()[0][did]
        except KeyError:
            raise ValidationError(f"unknown domain {did}") from None

    def link(self, lid: str) -> SharedLink:
        try:
            return self._maps()[2][lid]
        except KeyError:
            raise ValidationError(f"unknown link {lid}") from None

    def resolved_coupling(self) -> list[CouplingEdge]:
        if not hasattr(self, "_resolved"):
            self._resolved = resolve_coupling(self)
        return self._resolved

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([d.r_min for d in self.domains])
        hi = np.array([d.r_max for d in self.domains])
        return lo, hi


def auto_coupling(scenario: Scenario) -> list[CouplingEdge]:
    """Derive coupling edges from the scenario's shared links and nodes."""
    ids = scenario.domain_ids
    edges = []
    for i, m in enumerate(ids):
        for n in ids[i + 1:]:
            sl = tuple(l.id for l in scenario.links
                       if l.coeffs.get(m, 0.0) > 0 and l.coeffs.get(n, 0.0) > 0)
            sn = tuple(nd.id for nd in scenario.nodes
                       if _node_serves(scenario, nd, m) and _node_serves(scenario, nd, n))
            if sl or sn:
                edges.append(CouplingEdge(m, n, shared_links=sl, shared_nodes=sn))
    return edges


def resolve_coupling(scenario: Scenario) -> list[CouplingEdge]:
    """Fill in the shared-resource lists on explicitly declared edges."""
    out = []
    for e in scenario.coupling:
        sl = tuple(l.id for l in scenario.links
                   if l.coeffs.get(e.m, 0.0) > 0 and l.coeffs.get(e.n, 0.0) > 0)
        sn = tuple(nd.id for nd in scenario.nodes
                   if _node_serves(scenario, nd, e.m) and _node_serves(scenario, nd, e.n))
        out.append(CouplingEdge(e.m, e.n, e.utility, e.w_link, e.w_energy, e.w_util,
                                e.sign, sl, sn))
    return out


def _node_serves(scenario: Scenario, node: SharedNode, did: str) -> bool:
    return any(scenario.link(l).coeffs.get(did, 0.0) > 0 for l in node.incident)


# ---------------------------------------------------------------------------
# Model evaluation
# ---------------------------------------------------------------------------

def utility(d: DomainSpec, r: float) -> float:
    """Sigmoid utility; 0.5 at the midpoint, saturating in floating point."""
    z = -d.gamma * (r - d.lam)
    if z > 700:
        return math.exp(-z)  # underflow-safe tail
    return 1.0 / (1.0 + math.exp(z))


def link_flow(link: SharedLink, scenario: Scenario, r: np.ndarray) -> float:
    return float(sum(a * r[scenario.index(k)] for k, a in link.coeffs.items()))


def feasible(scenario: Scenario, r: np.ndarray) -> tuple[bool, list[tuple[str, float]]]:
    """Check every link's capacity; returns violations as (link id, excess)."""
    violations = []
    for l in scenario.links:
        excess = link_flow(l, scenario, r) - l.capacity
        if excess > 0:
            violations.append((l.id, excess))
    return (not violations), violations


def max_violation(scenario: Scenario, r: np.ndarray) -> float:
    worst = 0.0
    for l in scenario.links:
        worst = max(worst, link_flow(l, scenario, r) - l.capacity)
    return worst


def node_energy(node: SharedNode, scenario: Scenario, r: np.ndarray) -> float:
    """E_n = sum over incident links of (eps_tx d^2 + eps_rx) * flow(l)."""
    total = 0.0
    for lid, d in node.incident.items():
        total += (node.eps_tx * d * d + node.eps_rx) * link_flow(scenario.link(lid), scenario, r)
    return total


def _domain_node_coeff(scenario: Scenario, node: SharedNode, did: str) -> float:
    """Total routing coefficient of a domain over a node's incident links."""
    return sum(scenario.link(l).coeffs.get(did, 0.0) for l in node.incident)


def _node_etx_const(scenario: Scenario, node: SharedNode, m: str, n: str) -> float:
    """eps_tx * d^2 for the lowest-id incident link carrying either domain."""
    carrying = sorted(
        l for l in node.incident
        if scenario.link(l).coeffs.get(m, 0.0) > 0 or scenario.link(l).coeffs.get(n, 0.0) > 0
    )
    if not carrying:
        return 0.0
    d = node.incident[carrying[0]]
    return node.eps_tx * d * d


def phi_link(m: str, n: str, r: np.ndarray, scenario: Scenario) -> float:
    """Flow-product contention over links shared by both domains."""
    if m == n:
        raise ValidationError("phi_link needs two distinct domains")
    im, iN = scenario.index(m), scenario.index(n)
    total = 0.0
    for l in scenario.links:
        am, an = l.coeffs.get(m, 0.0), l.coeffs.get(n, 0.0)
        if am > 0 and an > 0:
            total += (am * r[im]) * (an * r[iN]) / l.capacity
    return total


def phi_energy(m: str, n: str, r: np.ndarray, scenario: Scenario) -> float:
    """Energy cost of both domains' flows meeting at shared nodes."""
    if m == n:
        raise ValidationError("phi_energy needs two distinct domains")
    im, iN = scenario.index(m), scenario.index(n)
    total = 0.0
    for nd in scenario.nodes:
        am = _domain_node_coeff(scenario, nd, m)
        an = _domain_node_coeff(scenario, nd, n)
        if am > 0 and an > 0:
            total += _node_etx_const(scenario, nd, m, n) * (am * r[im]) * (an * r[iN])
    return total


def phi_utility(dm: DomainSpec, dn: DomainSpec, rm: float, rn: float) -> float:
    """gamma_m gamma_n (R_m - lambda_m)(R_n - lambda_n)."""
    return dm.gamma * dn.gamma * (rm - dm.lam) * (rn - dn.lam)


def phi_total(edge: CouplingEdge, r: np.ndarray, scenario: Scenario) -> float:
    """Weighted sum of the three interaction components on one coupling edge."""
    val = edge.w_link * phi_link(edge.m, edge.n, r, scenario)
    val += edge.w_energy * phi_energy(edge.m, edge.n, r, scenario)
    if edge.utility:
        dm, dn = scenario.domain(edge.m), scenario.domain(edge.n)
        val += edge.w_util * phi_utility(dm, dn, r[scenario.index(edge.m)], r[scenario.index(edge.n)])
    return val


def objective(r: np.ndarray, scenario: Scenario, mode: str) -> float:
    """Sum of utilities, minus signed coupling penalties in coupled mode."""
    r = np.asarray(r, dtype=float)
    if r.shape != (len(scenario.domains),):
        raise ValidationError("allocation dimension mismatch")
    total = sum(utility(d, r[i]) for i, d in enumerate(scenario.domains))
    if mode == "isolated":
        return float(total)
    if mode != "coupled":
        raise ValidationError(f"unknown mode {mode!r}")
    for e in scenario.resolved_coupling():
        total -= e.sign * phi_total(e, r, scenario)
    return float(total)


def gradient(r: np.ndarray, scenario: Scenario, mode: str) -> np.ndarray:
    """Analytic gradient of :func:`objective`."""
    r = np.asarray(r, dtype=float)
    K = len(scenario.domains)
    if r.shape != (K,):
        raise ValidationError("allocation dimension mismatch")
    g = np.zeros(K)
    for i, d in enumerate(scenario.domains):
        u = utility(d, r[i])
        g[i] = d.gamma * u * (1.0 - u)
    if mode == "isolated":
        return g
    if mode != "coupled":
        raise ValidationError(f"unknown mode {mode!r}")
    for e in scenario.resolved_coupling():
        im, iN = scenario.index(e.m), scenario.index(e.n)
        # phi_link
        dlm = dln = 0.0
        for l in scenario.links:
            am, an = l.coeffs.get(e.m, 0.0), l.coeffs.get(e.n, 0.0)
            if am > 0 and an > 0:
                dlm += am * an * r[iN] / l.capacity
                dln += am * an * r[im] / l.capacity
        # phi_energy
        dem = den = 0.0
        for nd in scenario.nodes:
            am = _domain_node_coeff(scenario, nd, e.m)
            an = _domain_node_coeff(scenario, nd, e.n)
            if am > 0 and an > 0:
                c = _node_etx_const(scenario, nd, e.m, e.n)
                dem += c * am * an * r[iN]
                den += c * am * an * r[im]
        g[im] -= e.sign * (e.w_link * dlm + e.w_energy * dem)
        g[iN] -= e.sign * (e.w_link * dln + e.w_energy * den)
        if e.utility:
            dm, dn = scenario.domain(e.m), scenario.domain(e.n)
            g[im] -= e.sign * e.w_util * dm.gamma * dn.gamma * (r[iN] - dn.lam)
            g[iN] -= e.sign * e.w_util * dm.gamma * dn.gamma * (r[im] - dm.lam)
    return g


# ---------------------------------------------------------------------------
# Optimization
# ---------------------------------------------------------------------------

PENALTY_ROUNDS = 5
PENALTY_GROWTH = 10.0
PENALTY_MU0 = 1.0
MULTI_STARTS = 16
INNER_ITERS = 200
FEASIBILITY_TOL = 1e-6

_HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _halton(i: int, base: int) -> float:
    f, r = 1.0, 0.0
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def _start_points(scenario: Scenario, seed: int) -> np.ndarray:
    """Seeded low-discrepancy starts: rotated Halton points mapped to the box."""
    K = len(scenario.domains)
    rng = np.random.default_rng(seed)
    shift = rng.random(K)
    lo, hi = scenario.bounds()
    pts = np.empty((MULTI_STARTS, K))
    for s in range(MULTI_STARTS):
        for k in range(K):
            u = (_halton(s + 1, _HALTON_PRIMES[k % len(_HALTON_PRIMES)]) + shift[k]) % 1.0
            pts[s, k] = lo[k] + u * (hi[k] - lo[k])
    return pts


def _penalized(r: np.ndarray, scenario: Scenario, mode: str, mu: float) -> float:
    val = objective(r, scenario, mode)
    if mode == "coupled":
        for l in scenario.links:
            excess = link_flow(l, scenario, r) - l.capacity
            if excess > 0:
                val -= mu * excess * excess
    return val


def _penalized_grad(r: np.ndarray, scenario: Scenario, mode: str, mu: float) -> np.ndarray:
    g = gradient(r, scenario, mode)
    if mode == "coupled":
        for l in scenario.links:
            excess = link_flow(l, scenario, r) - l.capacity
            if excess > 0:
                for k, a in l.coeffs.items():
                    g[scenario.index(k)] -= 2.0 * mu * excess * a
    return g


def _restore_feasible(scenario: Scenario, r: np.ndarray) -> np.ndarray:
    """Shrink toward the (feasible) lower-bound corner until links fit."""
    lo, _ = scenario.bounds()
    if max_violation(scenario, r) <= FEASIBILITY_TOL:
        return r
    t_lo, t_hi = 0.0, 1.0
    for _ in range(80):
        t = 0.5 * (t_lo + t_hi)
        cand = lo + t * (r - lo)
        if max_violation(scenario, cand) <= 0.0:
            t_lo = t
        else:
            t_hi = t
    return lo + t_lo * (r - lo)


def _coordinate_polish(scenario: Scenario, mode: str, r: np.ndarray, sweeps: int = 3) -> np.ndarray:
    """Per-coordinate line search on the exact feasible interval.

    Penalty methods land slightly off the active constraint; this nails the
    optimum onto the boundary to grid-oracle accuracy.
    """
    lo, hi = scenario.bounds()
    r = r.copy()
    for _ in range(sweeps):
        for k in range(len(r)):
            upper = hi[k]
            if mode == "coupled":
                for l in scenario.links:
                    a = l.coeffs.get(scenario.domains[k].id, 0.0)
                    if a > 0:
                        rest = link_flow(l, scenario, r) - a * r[k]
                        upper = min(upper, (l.capacity - rest) / a)
            upper = max(upper, lo[k])
            grid = np.linspace(lo[k], upper, 2001)
            best_v, best_x = -np.inf, r[k]
            for x in grid:
                r[k] = x
                v = objective(r, scenario, mode)
                if v > best_v + 1e-15:
                    best_v, best_x = v, x
            r[k] = best_x
            # refine around the winner
            span = (upper - lo[k]) / 2000 if upper > lo[k] else 0.0
            if span > 0:
                fine = np.linspace(max(lo[k], best_x - span), min(upper, best_x + span), 201)
                for x in fine:
                    r[k] = x
                    v = objective(r, scenario, mode)
                    if v > best_v + 1e-15:
                        best_v, best_x = v, x
                r[k] = best_x
    return r


def optimize(
    scenario: Scenario, mode: str, seed: int = 0, trace: Optional[list] = None
) -> np.ndarray:
    """Projected gradient ascent with escalating quadratic link penalties.

    16 deterministic multi-starts from a seeded low-discrepancy grid; box
    projection every step; backtracking halving from step 1.0.  In coupled
    mode the returned point satisfies every link constraint within 1e-6.
    """
    if mode not in ("isolated", "coupled"):
        raise ValidationError(f"unknown mode {mode!r}")
    lo, hi = scenario.bounds()
    if mode == "coupled" and max_violation(scenario, lo) > 0:
        raise InfeasibleError("lower-bound allocation already violates a link constraint")
    starts = _start_points(scenario, seed)
    best_r, best_val, best_trace = None, -np.inf, []
    for si in range(MULTI_STARTS):
        r = starts[si].copy()
        local_trace = []
        it = 0
        for rnd in range(PENALTY_ROUNDS):
            mu = PENALTY_MU0 * PENALTY_GROWTH ** rnd
            for _ in range(INNER_ITERS):
                g = _penalized_grad(r, scenario, mode, mu)
                base = _penalized(r, scenario, mode, mu)
                step = 1.0
                moved = False
                for _ in range(40):
                    cand = np.clip(r + step * g, lo, hi)
                    if _penalized(cand, scenario, mode, mu) > base + 1e-15:
                        r = cand
                        moved = True
                        break
                    step *= 0.5
                it += 1
                local_trace.append((it, objective(r, scenario, mode), max_violation(scenario, r)))
                if not moved or np.linalg.norm(step * g) < 1e-12:
                    break
        if mode == "coupled":
            r = _restore_feasible(scenario, r)
        val = objective(r, scenario, mode)
        if val > best_val + 1e-12:
            best_r, best_val, best_trace = r, val, local_trace
    best_r = _coordinate_polish(scenario, mode, best_r)
    best_trace.append(
        (best_trace[-1][0] + 1 if best_trace else 1,
         objective(best_r, scenario, mode),
         max_violation(scenario, best_r))
    )
    if trace is not None:
        trace.extend(best_trace)
    return best_r


def demo_scenario() -> Scenario:
    """Two domains contending for one shared link.

    Capacity is half of what both domains want at their upper bounds, so the
    per-domain optima collide on the link: optimizing in isolation yields an
    infeasible allocation, while the coupled run routes around the contention.
    """
    domains = [
        DomainSpec("compute", 2.0, 2.0, 0.0, 4.0),
        DomainSpec("content", 2.2, 1.8, 0.0, 4.0),
    ]
    links = [SharedLink("backbone", 4.0, {"compute": 1.0, "content": 1.0})]
    s = Scenario(domains, links, [], [])
    s.coupling = auto_coupling(s)
    return Scenario(s.domains, s.links, s.nodes, s.coupling)


# ---------------------------------------------------------------------------
# Comparison report
# ---------------------------------------------------------------------------

@dataclass
class OptimizationReport:
    seed: int
    r_isolated: tuple[float, ...]
    r_coupled: tuple[float, ...]
    objectives: dict[str, dict[str, float]]  # optimum -> {mode -> value}
    slack_isolated: dict[str, float]  # link id -> C_l - flow at isolated optimum
    slack_coupled: dict[str, float]
    gap: float  # coupled objective advantage of the coupled optimum
    trace_isolated: list[tuple[int, float, float]]
    trace_coupled: list[tuple[int, float, float]]


def compare(scenario: Scenario, seed: int = 0) -> OptimizationReport:
    """Optimize both modes and report the coupling gap (Fig. 3-style)."""
    tr_iso: list = []
    tr_cpl: list = []
    r_iso = optimize(scenario, "isolated", seed, tr_iso)
    r_cpl = optimize(scenario, "coupled", seed, tr_cpl)
    objectives = {
        "isolated_optimum": {
            "isolated": objective(r_iso, scenario, "isolated"),
            "coupled": objective(r_iso, scenario, "coupled"),
        },
        "coupled_optimum": {
            "isolated": objective(r_cpl, scenario, "isolated"),
            "coupled": objective(r_cpl, scenario, "coupled"),
        },
    }
    def slack(r):
        return {l.id: l.capacity - link_flow(l, scenario, r) for l in scenario.links}

    gap = objectives["coupled_optimum"]["coupled"] - objectives["isolated_optimum"]["coupled"]
    return OptimizationReport(
        seed,
        tuple(float(x) for x in r_iso),
        tuple(float(x) for x in r_cpl),
        objectives,
        slack(r_iso),
        slack(r_cpl),
        float(gap),
        tr_iso,
        tr_cpl,
    )


# ---------------------------------------------------------------------------
# Coupling derivation from a multilayer snapshot
# ---------------------------------------------------------------------------

SHARED_LINK_ROLES = frozenset({"router"})
SHARED_NODE_ROLES = frozenset({"server", "storage-node"})


def derive_coupling(
    snapshot: SnapshotView, domain_map: dict[str, set[int]]
) -> list[CouplingEdge]:
    """Build coupling edges from a snapshot: a vertex with a router role
    shared by two domains couples them via a link, a server/storage vertex
    via a node, and any inter-layer edge between the subsets sets the
    utility flag.  Vertices with other (resource-owning) roles must not be
    shared between domains."""
    for did, vs in domain_map.items():
        for v in vs:
            if v not in snapshot.vertices:
                raise ValidationError(f"domain {did} references unknown vertex {v}")
    dids = sorted(domain_map)
    edges = []
    for i, m in enumerate(dids):
        for n in dids[i + 1:]:
            shared = domain_map[m] & domain_map[n]
            links, nodes = [], []
            for v in sorted(shared):
                roles = snapshot.vertices[v].roles
                if roles & SHARED_LINK_ROLES:
                    links.append(str(v))
                elif roles & SHARED_NODE_ROLES:
                    nodes.append(str(v))
                else:
                    raise ValidationError(
                        f"vertex {v} (roles {sorted(roles)}) is resource-owning and "
                        f"shared by domains {m} and {n}"
                    )
            util = any(
                not e.intra_layer
                and ((e.src in domain_map[m] and e.dst in domain_map[n])
                     or (e.src in domain_map[n] and e.dst in domain_map[m]))
                for e in snapshot.edges
            )
            if links or nodes or util:
                edges.append(CouplingEdge(m, n, utility=util,
                                          shared_links=tuple(links),
                                          shared_nodes=tuple(nodes)))
    return edges
