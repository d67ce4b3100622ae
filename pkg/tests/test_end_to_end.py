"""Encrypted engine vs the plaintext RBAC oracle on randomized scenarios."""

from __future__ import annotations

import random

import pytest

from app.core.exceptions import KeyNotFoundError
from app.schemas.policy import Permission, PermissionAssignmentPolicy, RoleAssignmentPolicy
from app.services import client_toolkit
from app.services.client_toolkit import KeyAuthority
from app.services.engine import ServiceProvider
from tests.oracle import Outcome, PlainRBAC, random_assertions, random_condition, random_hierarchy

ACTIONS = ("read", "write", "sign")
TARGETS = ("record", "chart", "prescription")


class Scenario:
    def __init__(self, seed: int, params, users) -> None:
        self.rng = random.Random(seed)
        self.params, self.users = params, users
        self.sp = ServiceProvider(params=params)
        for enrolled in users.values():
            self.sp.install_keyset(enrolled.server)
        self.oracle = PlainRBAC()
        self.roles = [f"role-{i}" for i in range(self.rng.randint(1, 6))]

    def deploy(self, document) -> None:
        self.oracle.deploy(document)
        bundle = client_toolkit.encrypt_policy(document, self.users["admin"].client, self.params, self.rng)
        self.sp.deploy(bundle)

    def build(self) -> None:
        rng = self.rng
        for user in ("alice", "bob"):
            if rng.random() < 0.85:
                assigned = rng.sample(self.roles, rng.randint(1, len(self.roles)))
                self.deploy(RoleAssignmentPolicy(requester_id=user, roles=assigned, condition=random_condition(rng, 0.3)))
        for _ in range(rng.randint(1, 6)):
            pairs = {(rng.choice(ACTIONS), rng.choice(TARGETS)) for _ in range(rng.randint(1, 4))}
            self.deploy(
                PermissionAssignmentPolicy(
                    role=rng.choice(self.roles),
                    permissions=[Permission(action=a, target=t) for a, t in sorted(pairs)],
                    condition=random_condition(rng),
                )
            )
        hierarchy = random_hierarchy(rng, self.roles)
        if hierarchy is not None:
            self.deploy(hierarchy)

    def _batch(self, assertions, correlation_id):
        if assertions is None:
            return None
        return client_toolkit.make_attribute_batch(
            assertions, self.users["pip"].client, self.params, correlation_id, self.rng
        )

    def activate(self, user: str, role: str) -> tuple[Outcome, Outcome]:
        assertions = random_assertions(self.rng)
        req = client_toolkit.make_activation_request(self.users[user].client, role, self.params, self.rng)
        decision = self.sp.activate_role(req, self._batch(assertions, req.correlation_id))
        return _outcome(decision), self.oracle.activate(user, role, assertions)

    def access(self, user: str) -> tuple[Outcome, Outcome]:
        rng = self.rng
        role, action, target = rng.choice(self.roles), rng.choice(ACTIONS), rng.choice(TARGETS)
        assertions = random_assertions(rng)
        req = client_toolkit.make_access_request(
            self.users[user].client, role, action, target, self.params, rng
        )
        decision = self.sp.authorize_access(req, self._batch(assertions, req.correlation_id))
        return _outcome(decision), self.oracle.access(user, role, action, target, assertions)


def _outcome(decision) -> Outcome:
    return Outcome(decision.permitted, decision.reason, decision.via_base_role)


def _run(seed: int, params, users) -> list[tuple]:
    scenario = Scenario(seed, params, users)
    scenario.build()
    mismatches = []
    for _ in range(4):
        user = scenario.rng.choice(("alice", "bob"))
        got, want = scenario.activate(user, scenario.rng.choice(scenario.roles))
        if got != want:
            mismatches.append((seed, "activate", got, want))
    for _ in range(8):
        got, want = scenario.access(scenario.rng.choice(("alice", "bob")))
        if got != want:
            mismatches.append((seed, "access", got, want))
    return mismatches


def test_decisions_match_oracle(params, users):
    mismatches = [m for seed in range(40) for m in _run(seed, params, users)]
    assert mismatches == []


@pytest.mark.slow
def test_decisions_match_oracle_thousand_scenarios(params, users):
    mismatches = [m for seed in range(1000) for m in _run(seed, params, users)]
    assert mismatches == []


# ── Revocation ────────────────────────────────────────────────────────────────


def test_revocation_is_immediate_and_local(params, users):
    scenario = Scenario(7, params, users)
    shared = ["role-0"]
    scenario.roles = shared
    for user in ("alice", "bob"):
        scenario.deploy(RoleAssignmentPolicy(requester_id=user, roles=shared))
    scenario.deploy(PermissionAssignmentPolicy(role="role-0", permissions=[Permission(action="read", target="chart")]))
    sp, rng = scenario.sp, scenario.rng

    def act(user):
        return sp.activate_role(client_toolkit.make_activation_request(users[user].client, "role-0", params, rng))

    def req(user):
        return sp.authorize_access(
            client_toolkit.make_access_request(users[user].client, "role-0", "read", "chart", params, rng)
        )

    assert act("alice").permitted and act("bob").permitted
    before_digest = sp.policy_digest()
    bob_before = req("bob")

    assert sp.revoke_user("alice")
    assert sp.sessions.size("alice") == 0
    for call in (act, req):
        for _ in range(5):
            with pytest.raises(KeyNotFoundError):
                call("alice")
    assert sp.policy_digest() == before_digest
    assert req("bob") == bob_before
    assert not sp.revoke_user("alice")


def test_reissued_keys_make_old_client_half_useless(params, master_secret, users, rng):
    authority = KeyAuthority(params, master_secret, rng=random.Random(5))
    old_client, old_server = authority.enroll("carol")
    new_client, new_server = authority.enroll("carol")
    sp = ServiceProvider(params=params)
    sp.install_keyset(users["admin"].server)
    sp.install_keyset(new_server)
    sp.deploy(
        client_toolkit.encrypt_policy(
            RoleAssignmentPolicy(requester_id="carol", roles=["Doctor"]), users["admin"].client, params, rng
        )
    )
    assert sp.activate_role(client_toolkit.make_activation_request(new_client, "Doctor", params, rng)).permitted
    stale = sp.activate_role(client_toolkit.make_activation_request(old_client, "Doctor", params, rng))
    assert not stale.permitted
    assert old_server != new_server
