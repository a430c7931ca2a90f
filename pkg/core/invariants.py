"""Invariants d'exécution vérifiés après chaque tour (mode vérifié).

Chaque violation est une chaîne `invariant N: détail`. La liste vide signifie
que la configuration est cohérente.
"""

from typing import Any

from core.cost_graph import CostGraph
from core.dag_analysis import is_well_formed
from core.lang import NONE, OWNED, SHARED, CVType, MutexType, NatType, PermissionLevel, RefType, UnitType
from core.logging_config import get_logger
from core.machine import Configuration, ThreadState, is_liftable
from core.syntax import CVHandle, MutexHandle, Num, RefHandle, UnitVal

logger = get_logger(__name__)


def _value_fits(v: Any, ty: Any) -> bool:
    """Forme de la valeur compatible avec le type de la cellule."""
    if isinstance(ty, UnitType):
        return isinstance(v, UnitVal)
    if isinstance(ty, NatType):
        return isinstance(v, Num) and v.n >= 0
    if isinstance(ty, RefType):
        return isinstance(v, RefHandle)
    if isinstance(ty, CVType):
        return isinstance(v, CVHandle) and v.prio == ty.prio
    if isinstance(ty, MutexType):
        return isinstance(v, MutexHandle)
    return True


def _thread_prio(config: Configuration, name: str) -> str | None:
    if name in config.pool:
        return config.pool[name].prio
    found = config.find_waiter(name)
    if found is None:
        return None
    key, idx = found
    return config.waiting[key][idx].prio


def _no_signal(g: CostGraph, threads: list[ThreadState]) -> list[str]:
    """Poignées de CV vues au dernier sommet u de chaque thread vivant.

    Pour une poignée α à ρ dans la signature de u, et un thread a ≠ b dont le
    dernier sommet descend d'un sommet u′ qui n'est pas ancêtre fort de u:
    - a n'a aucune permission sur α sous ρ;
    - si u′ est ancêtre fort du dernier sommet de a, concurrent de u, sous ρ,
      et que a tourne au moins à ρ, a n'a aucune permission sur α.
    """
    order = g.order
    out: list[str] = []
    lasts = {t.name: g.last(t.name) for t in threads if t.name in g.threads}
    lasts = {name: u for name, u in lasts.items() if u is not None}
    if not any(g.vertex_sig[u].cvs for u in lasts.values()):
        return out

    cache: dict[int, set[int]] = {}

    def ancestors(x: int) -> set[int]:
        if x not in cache:
            cache[x] = g.ancestors(x)
        return cache[x]

    anc: dict[str, set[int]] = {}
    strong: dict[str, set[int]] = {}
    for name, u in lasts.items():
        anc[name] = ancestors(u)
        weak: set[int] = set()
        for x, y in g.weak_edges:
            if y in anc[name]:
                weak |= ancestors(x)
        strong[name] = anc[name] - weak

    for b in threads:
        u = lasts.get(b.name)
        if u is None:
            continue
        handles = {cv: prios for cv, prios in g.vertex_sig[u].cvs.items() if prios}
        for a in threads:
            if a is b or a.name not in lasts or not (anc[a.name] - strong[b.name]):
                continue
            concurrent = strong[a.name] - anc[b.name]
            for cv, prios in sorted(handles.items()):
                row = a.perms.row(cv)
                if not row:
                    continue
                for rho in sorted(prios, key=order.index):
                    below = sorted((p for p in row if not order.le(rho, p)), key=order.index)
                    if below:
                        out.append(
                            f"invariant 8: {a.name} holds {cv}@{below[0]} below the handle "
                            f"{cv}@{rho} of {b.name} at vertex {u}"
                        )
                        continue
                    if not order.le(rho, a.prio):
                        continue
                    low = sorted(x for x in concurrent if not order.le(rho, g.prio(x)))
                    if low:
                        out.append(
                            f"invariant 8: {a.name} at {a.prio} descends from vertex {low[0]} "
                            f"below {rho} and still holds {cv}, handle of {b.name} at vertex {u}"
                        )
    return out


def check_invariants(config: Configuration, g: CostGraph, check_wf: bool = False) -> list[str]:
    order = g.order
    out: list[str] = []
    threads: list[ThreadState] = config.all_threads()

    # 1. découpage joint des permissions, mémoire bien typée
    holders: dict[tuple[str, str], list[tuple[str, PermissionLevel]]] = {}
    for t in threads:
        for key, level in t.perms:
            holders.setdefault(key, []).append((t.name, level))
    for (cv, prio), found in sorted(holders.items()):
        owners = [name for name, level in found if level is OWNED]
        if len(owners) > 1:
            out.append(f"invariant 1: {' and '.join(owners)} all own {cv}@{prio}")
        elif owners and len(found) > 1:
            sharers = [name for name, level in found if level is SHARED]
            out.append(f"invariant 1: {owners[0]} owns {cv}@{prio} shared by {', '.join(sharers)}")
    for t in threads:
        for cell, ty in t.sig.refs.items():
            entry = config.mem.get(cell)
            if entry is None or not _value_fits(entry.value, ty):
                out.append(f"invariant 1: cell {cell} does not hold a value of type {ty}")

    # 2. bonne formation du graphe
    if check_wf and g.is_acyclic(strong_only=False):
        violation = is_well_formed(g)
        if violation is not None:
            out.append(f"invariant 2: {violation}")

    for mutex, ceiling in config.mutex_ceilings.items():
        waiters = config.waiting.get(mutex, [])
        holder = config.locks.get(mutex)

        # 4. pas d'attente sur un mutex libre
        if holder is None:
            if waiters:
                out.append(f"invariant 4: {len(waiters)} waiter(s) on unlocked mutex {mutex}")
            continue

        # 9. détenteur vivant, relevable s'il n'est pas au plafond
        current = config.resolve(holder.thread)
        holder_prio = _thread_prio(config, current)
        if holder_prio is None:
            out.append(f"invariant 9: holder {current} of {mutex} is neither ready nor waiting")
            continue
        if holder_prio != ceiling:
            state = config.pool[current].state if current in config.pool else None
            if state is None:
                key, idx = config.find_waiter(current)
                state = config.waiting[key][idx].thread.state
            if not is_liftable(state, mutex):
                out.append(f"invariant 9: holder {current} of {mutex} cannot be lifted to {ceiling}")

        for w in waiters:
            # 3. arête faible depuis le sommet d'acquisition du détenteur
            if (holder.u1, w.u2) not in g.weak_edges:
                out.append(f"invariant 3: no weak edge {holder.u1}->{w.u2} for waiter {w.name} on {mutex}")
            if not order.le(w.prio, holder_prio):
                out.append(f"invariant 3: waiter {w.name} at {w.prio} above holder {current} at {holder_prio}")
            if w.prio != ceiling and not is_liftable(w.thread.state, mutex):
                out.append(f"invariant 3: waiter {w.name} on {mutex} cannot be lifted")
            # 6. waiters sous le plafond
            if not order.le(w.prio, ceiling):
                out.append(f"invariant 6: waiter {w.name} at {w.prio} above ceiling {ceiling} of {mutex}")

    # 5. plafonds cohérents dans toutes les signatures
    for t in threads:
        for mutex, ceiling in t.sig.mutexes.items():
            if config.mutex_ceilings.get(mutex) != ceiling:
                out.append(f"invariant 5: {t.name} sees ceiling {ceiling} for {mutex}")

    # 7. waiters de CV sous une poignée de leur signature
    for key, ws in config.waiting.items():
        if key in config.mutex_ceilings:
            continue
        for w in ws:
            handles = w.thread.sig.cv_prios(key)
            if not any(order.le(w.prio, p) for p in handles):
                out.append(f"invariant 7: {w.name} at {w.prio} waits on {key} without a handle at or above it")

    # 8. pas de signal possible depuis une branche concurrente sous la poignée
    out.extend(_no_signal(g, threads))

    # 10. toute permission tenue est couverte par une poignée
    for t in threads:
        for (cv, prio), level in t.perms:
            if level is NONE:
                continue
            if not any(order.le(p, prio) for p in t.sig.cv_prios(cv)):
                out.append(f"invariant 10: {t.name} holds {cv}@{prio} without a handle at or below {prio}")

    if out:
        logger.debug(f"{len(out)} invariant violation(s), first: {out[0]}")
    return out
