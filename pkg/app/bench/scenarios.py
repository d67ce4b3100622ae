"""
app/bench/scenarios.py

One BenchScenario per scaling curve. A scenario's measure() does its own
untimed setup, then times the client-side and the server-side part of one
operation and reports how many cryptographic operations the server did.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from app.bench import flat_baseline
from app.bench.flat_baseline import FlatPolicyStore
from app.bench.workload import (
    PIP_ID,
    REQUESTER_ID,
    BenchContext,
    chain_hierarchy,
    comparisons,
    numeric_comparisons,
    permission_assignment,
    role_assignment,
    role_names,
    timed,
)
from app.schemas.bundles import payload_counts
from app.schemas.policy import AttributeAssertion, ConditionAttachment, RoleAssignmentPolicy
from app.services import client_toolkit
from app.services.crypto.scheme import client_trapdoor
from app.services.engine import EvaluationStats, ServiceProvider, evaluation
from app.services.policy_model import tokenize_action, tokenize_subject, tokenize_target

MIN_REPETITIONS = 5


@dataclass(frozen=True)
class Sample:
    client_s: float
    server_s: float
    operations: int


Measure = Callable[[BenchContext, str, int], Sample]


@dataclass(frozen=True)
class BenchScenario:
    name: str
    parameter: str
    sweep: tuple[int, ...]
    series: tuple[str, ...]
    measure: Measure
    description: str = ""
    repetitions: int = MIN_REPETITIONS

    def __post_init__(self) -> None:
        if not self.sweep:
            raise ValueError(f"scenario {self.name!r} has an empty sweep")
        if self.repetitions < MIN_REPETITIONS:
            raise ValueError(f"scenario {self.name!r} needs at least {MIN_REPETITIONS} repetitions")


def _complete_all(sp: ServiceProvider, user_id: str, trapdoors, stats: EvaluationStats | None = None) -> list:
    return [sp.complete_trapdoor(td, user_id, stats) for td in trapdoors]


# ── Deployment ────────────────────────────────────────────────────────────────


def measure_role_assignment(ctx: BenchContext, series: str, n: int) -> Sample:
    sp, policy = ctx.provider(), role_assignment(n)
    bundle, client = timed(lambda: client_toolkit.encrypt_role_assignment(policy, ctx.admin, ctx.params, ctx.rng))
    _, server = timed(lambda: sp.reencrypt_bundle(bundle))
    return Sample(client, server, payload_counts(bundle.payload)[0])


def measure_permission_assignment(ctx: BenchContext, series: str, n: int) -> Sample:
    sp, policy = ctx.provider(), permission_assignment("role-0", n)
    bundle, client = timed(
        lambda: client_toolkit.encrypt_permission_assignment(policy, ctx.admin, ctx.params, ctx.rng)
    )
    _, server = timed(lambda: sp.reencrypt_bundle(bundle))
    return Sample(client, server, payload_counts(bundle.payload)[0])


def _condition_deploy(ctx: BenchContext, tree) -> Sample:
    sp = ctx.provider()
    attachment = ConditionAttachment(attach_to="permission_assignment", target="bench", tree=tree)
    bundle, client = timed(
        lambda: client_toolkit.encrypt_condition_attachment(attachment, ctx.admin, ctx.params, ctx.rng)
    )
    _, server = timed(lambda: sp.reencrypt_bundle(bundle))
    return Sample(client, server, payload_counts(bundle.payload)[0])


def measure_condition_deployment(ctx: BenchContext, series: str, n: int) -> Sample:
    tree, _ = comparisons(series, n)
    return _condition_deploy(ctx, tree)


def measure_bit_width_deployment(ctx: BenchContext, series: str, bits: int) -> Sample:
    tree, _ = numeric_comparisons(1, bit_width=bits)
    return _condition_deploy(ctx, tree)


def measure_hierarchy_deployment(ctx: BenchContext, series: str, n: int) -> Sample:
    sp, graph = ctx.provider(), chain_hierarchy(role_names(n))
    bundle, client = timed(lambda: client_toolkit.encrypt_hierarchy(graph, ctx.admin, ctx.params, ctx.rng))
    _, server = timed(lambda: sp.reencrypt_bundle(bundle))
    return Sample(client, server, sum(payload_counts(bundle.payload)))


# ── Requests ──────────────────────────────────────────────────────────────────


def measure_request_generation(ctx: BenchContext, series: str, _: int) -> Sample:
    sp = ctx.provider()
    if series == "ACT":
        req, client = timed(
            lambda: client_toolkit.make_activation_request(ctx.requester, "role-0", ctx.params, ctx.rng)
        )
        trapdoors = [req.role_td]
    else:
        req, client = timed(
            lambda: client_toolkit.make_access_request(
                ctx.requester, "role-0", "action-0", "target-0", ctx.params, ctx.rng
            )
        )
        trapdoors = [req.role_td, req.action_td, req.target_td]
    _, server = timed(lambda: _complete_all(sp, REQUESTER_ID, trapdoors))
    return Sample(client, server, len(trapdoors))


# ── Searches ──────────────────────────────────────────────────────────────────


def measure_role_search(ctx: BenchContext, series: str, n: int) -> Sample:
    sp = ctx.provider()
    roles = role_names(n)
    last = roles[-1]
    req, client = timed(lambda: client_toolkit.make_activation_request(ctx.requester, last, ctx.params, ctx.rng))
    stats = EvaluationStats()
    if series == "repository":
        ctx.deploy(sp, role_assignment(n))
        entry = sp.policy_store.role_assignment_for(REQUESTER_ID)
        _, server = timed(lambda: sp.search_role(req.role_td, entry.roles, REQUESTER_ID, stats))
        return Sample(client, server, stats.matches)

    # session: n roles already active, the requested one activated last
    for role in roles:
        td = client_toolkit.make_activation_request(ctx.requester, role, ctx.params, ctx.rng).role_td
        sp.sessions.activate(REQUESTER_ID, _complete_all(sp, REQUESTER_ID, [td])[0], sp.clock())

    def lookup() -> bool:
        completed = sp.complete_trapdoor(req.role_td, REQUESTER_ID, stats)
        return evaluation.search_session(completed, sp.sessions.active_roles(REQUESTER_ID, sp.clock()))

    _, server = timed(lookup)
    return Sample(client, server, n)


def measure_permission_role_search(ctx: BenchContext, series: str, n: int) -> Sample:
    """Role lookup across n permission entries with one completed trapdoor."""
    sp = ctx.provider()
    roles = role_names(n)
    ctx.deploy(sp, *(permission_assignment(role, 1) for role in roles))
    td, client = timed(
        lambda: client_toolkit.make_activation_request(ctx.requester, roles[-1], ctx.params, ctx.rng).role_td
    )
    stats = EvaluationStats()

    def scan() -> bool:
        completed = sp.complete_trapdoor(td, REQUESTER_ID, stats)
        return any(
            evaluation.search_role(completed, [entry.role], sp.params, stats)
            for entry in sp.policy_store.permission_entries()
        )

    _, server = timed(scan)
    return Sample(client, server, stats.matches)


def measure_permission_search(ctx: BenchContext, series: str, n: int) -> Sample:
    sp = ctx.provider()
    ctx.deploy(sp, permission_assignment("role-0", n))
    entry = sp.policy_store.permission_entries()[0]
    req, client = timed(
        lambda: client_toolkit.make_access_request(
            ctx.requester, "role-0", f"action-{n - 1}", f"target-{n - 1}", ctx.params, ctx.rng
        )
    )
    stats = EvaluationStats()
    _, server = timed(
        lambda: sp.search_permission(req.action_td, req.target_td, entry.permissions, REQUESTER_ID, stats)
    )
    return Sample(client, server, stats.matches)


def measure_hierarchy_search(ctx: BenchContext, series: str, n: int) -> Sample:
    """Bases of the most derived role in an n-role chain."""
    sp = ctx.provider()
    roles = role_names(n)
    ctx.deploy(sp, chain_hierarchy(roles))
    td, client = timed(
        lambda: client_toolkit.make_activation_request(ctx.requester, roles[-1], ctx.params, ctx.rng).role_td
    )
    stats = EvaluationStats()

    def traverse() -> list:
        completed = sp.complete_trapdoor(td, REQUESTER_ID, stats)
        return sp.hierarchy_bases(completed, stats)

    _, server = timed(traverse)
    return Sample(client, server, stats.matches)


# ── Contextual attributes ─────────────────────────────────────────────────────


def measure_pip_attributes(ctx: BenchContext, series: str, n: int) -> Sample:
    sp = ctx.provider()
    _, assertions = comparisons(series, n)
    trapdoors, client = timed(lambda: client_toolkit.pip_collect(assertions, ctx.pip, ctx.params, ctx.rng))
    _, server = timed(lambda: _complete_all(sp, PIP_ID, trapdoors))
    return Sample(client, server, len(trapdoors))


def _condition_evaluation(ctx: BenchContext, tree, assertions) -> Sample:
    sp = ctx.provider()
    client_tree = client_toolkit.encrypt_condition(tree, ctx.admin, ctx.params, ctx.rng)
    server_tree = sp.reencrypt_tree(client_tree, sp.key_store.get(ctx.admin.user_id))
    trapdoors, client = timed(lambda: client_toolkit.pip_collect(assertions, ctx.pip, ctx.params, ctx.rng))
    stats = EvaluationStats()
    holds, server = timed(lambda: sp.evaluate_condition(trapdoors, server_tree, PIP_ID, stats))
    if not holds:
        raise RuntimeError("benchmark condition evaluated to false; workload is inconsistent")
    return Sample(client, server, stats.matches)


def measure_condition_evaluation(ctx: BenchContext, series: str, n: int) -> Sample:
    return _condition_evaluation(ctx, *comparisons(series, n))


def measure_bit_width_evaluation(ctx: BenchContext, series: str, bits: int) -> Sample:
    return _condition_evaluation(ctx, *numeric_comparisons(1, bit_width=bits))


# ── RBAC vs flat ──────────────────────────────────────────────────────────────

SUBJECTS = 50
PAIRS_PER_SUBJECT = 10
ACTIVE_ROLES = 5
HIERARCHY_ROLES = 25
HIERARCHY_PERMISSIONS = 5


def _flat_access(ctx: BenchContext, subjects: int) -> Sample:
    sp = ctx.provider()
    store = FlatPolicyStore(sp)
    for s in range(subjects):
        name = f"subject-{s}"
        for i in range(PAIRS_PER_SUBJECT):
            store.deploy(name, f"action-{i}", f"target-{i}", flat_baseline.flat_condition(name), ctx.admin, ctx.rng)

    name, last = f"subject-{subjects - 1}", PAIRS_PER_SUBJECT - 1
    assertions = flat_baseline.on_duty_assertions(name)

    def client_side():
        return (
            [
                client_trapdoor(token, ctx.requester, ctx.params, ctx.rng)
                for token in (
                    tokenize_subject(name),
                    tokenize_action(f"action-{last}"),
                    tokenize_target(f"target-{last}"),
                )
            ],
            client_toolkit.pip_collect(assertions, ctx.pip, ctx.params, ctx.rng),
        )

    (request, pip_tds), client = timed(client_side)
    stats = EvaluationStats()

    def server_side():
        subject, action, target = _complete_all(sp, REQUESTER_ID, request)
        attributes = _complete_all(sp, PIP_ID, pip_tds)
        return store.authorize(subject, action, target, attributes, stats)

    decision, server = timed(server_side)
    if not decision.permitted:
        raise RuntimeError(f"flat baseline denied its own workload: {decision.reason}")
    return Sample(client, server, stats.matches)


def _rbac_access(ctx: BenchContext, roles: int, with_hierarchy: bool) -> Sample:
    sp = ctx.provider()
    names = role_names(roles)
    per_role = HIERARCHY_PERMISSIONS if with_hierarchy else PAIRS_PER_SUBJECT
    name_cond = flat_baseline.name_condition(REQUESTER_ID)
    ctx.deploy(
        sp,
        RoleAssignmentPolicy(
            requester_id=REQUESTER_ID,
            roles=names[-ACTIVE_ROLES:],
            condition=flat_baseline.ward_hours_condition(),
        ),
        *(permission_assignment(role, per_role, name_cond, tag=f"@{role}") for role in names),
    )
    active = names[-1]
    if with_hierarchy:
        ctx.deploy(sp, chain_hierarchy(names[-HIERARCHY_ROLES:]))
        # The permission sits on the direct base of the active role.
        granted_by = names[-2]
    else:
        granted_by = active

    act = client_toolkit.make_activation_request(ctx.requester, active, ctx.params, ctx.rng)
    on_duty = client_toolkit.make_attribute_batch(
        flat_baseline.on_duty_assertions(REQUESTER_ID), ctx.pip, ctx.params, act.correlation_id, ctx.rng
    )
    if not sp.activate_role(act, on_duty).permitted:
        raise RuntimeError("activation failed while preparing the RBAC workload")

    last = per_role - 1
    attrs = [AttributeAssertion(name="RequesterName", value=REQUESTER_ID)]

    def client_side():
        req = client_toolkit.make_access_request(
            ctx.requester,
            active,
            f"action-{last}@{granted_by}",
            f"target-{last}@{granted_by}",
            ctx.params,
            ctx.rng,
        )
        return req, client_toolkit.make_attribute_batch(attrs, ctx.pip, ctx.params, req.correlation_id, ctx.rng)

    (req, batch), client = timed(client_side)
    stats = EvaluationStats()
    decision, server = timed(lambda: sp.authorize_access(req, batch, stats))
    if not decision.permitted:
        raise RuntimeError(f"RBAC engine denied its own workload: {decision.reason}")
    return Sample(client, server, stats.matches)


def measure_rbac_vs_flat(ctx: BenchContext, series: str, n: int) -> Sample:
    if series == "flat":
        return _flat_access(ctx, n)
    return _rbac_access(ctx, n, with_hierarchy=series == "rbac_hierarchy")


# ── Registry ──────────────────────────────────────────────────────────────────

_ONE_TO_20 = tuple(range(1, 21))
_ONE_TO_10 = tuple(range(1, 11))
_BITS = tuple(range(2, 21))
_NODES = (5, 10, 15, 20, 25)

SCENARIOS: dict[str, BenchScenario] = {
    s.name: s
    for s in (
        BenchScenario("role_assignment", "roles", _ONE_TO_20, ("deploy",), measure_role_assignment,
                      "role assignment deployment vs number of roles"),
        BenchScenario("permission_assignment", "permissions", _ONE_TO_20, ("deploy",),
                      measure_permission_assignment, "permission assignment deployment vs permissions"),
        BenchScenario("condition_deployment", "comparisons", _ONE_TO_10, ("string", "numeric"),
                      measure_condition_deployment, "condition deployment, string vs 8-bit numeric"),
        BenchScenario("bit_width_deployment", "bits", _BITS, ("numeric",), measure_bit_width_deployment,
                      "one numeric comparison vs bit width"),
        BenchScenario("hierarchy_deployment", "nodes", _NODES, ("deploy",), measure_hierarchy_deployment,
                      "role hierarchy deployment vs nodes"),
        BenchScenario("request_generation", "requests", (1,), ("ACT", "REQ"), measure_request_generation,
                      "ACT vs REQ generation"),
        BenchScenario("role_search", "roles", _ONE_TO_20, ("repository", "session"), measure_role_search,
                      "role search in the role repository and in the session"),
        BenchScenario("permission_role_search", "entries", _ONE_TO_20, ("reused_trapdoor",),
                      measure_permission_role_search, "role search in the permission repository"),
        BenchScenario("permission_search", "permissions", _ONE_TO_20, ("search",), measure_permission_search,
                      "action/target search within one entry"),
        BenchScenario("pip_attributes", "attributes", _ONE_TO_10, ("string", "numeric"),
                      measure_pip_attributes, "PIP attribute trapdoor generation"),
        BenchScenario("condition_evaluation", "comparisons", _ONE_TO_10, ("string", "numeric"),
                      measure_condition_evaluation, "condition evaluation, string vs numeric"),
        BenchScenario("bit_width_evaluation", "bits", _BITS, ("numeric",), measure_bit_width_evaluation,
                      "numeric condition evaluation vs bit width"),
        BenchScenario("hierarchy_search", "nodes", _NODES, ("traverse",), measure_hierarchy_search,
                      "base-role discovery vs hierarchy size"),
        BenchScenario("rbac_vs_flat", "subjects_or_roles", (SUBJECTS,), ("flat", "rbac", "rbac_hierarchy"),
                      measure_rbac_vs_flat, "access decision: flat tuples vs RBAC"),
    )
}
