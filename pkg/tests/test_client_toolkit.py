from __future__ import annotations

import os
import random

import pytest

from app.core.exceptions import CycleDetectedError, InvalidParametersError, UnsupportedGateError
from app.models.enums import BundleKind, Gate
from app.schemas.bundles import ClientEncryptedGate, payload_counts, tree_leaf_count
from app.schemas.policy import (
    AttributeAssertion,
    CompareNode,
    ConditionTree,
    EqualsNode,
    GateNode,
    LeafToken,
    Permission,
    PermissionAssignmentPolicy,
    RoleAssignmentPolicy,
    RoleHierarchyGraph,
)
from app.services import client_toolkit, key_files
from app.services.client_toolkit import KeyAuthority
from app.services.crypto.scheme import split_is_consistent


@pytest.fixture
def authority(params, master_secret) -> KeyAuthority:
    return KeyAuthority(params, master_secret, rng=random.Random(8))


# ── TKMA ──────────────────────────────────────────────────────────────────────


def test_enroll_tracks_users(authority):
    authority.enroll("dana")
    authority.enroll("erin")
    assert authority.issued_users == ["dana", "erin"]


def test_reenrolling_replaces_the_pair(authority, master_secret, params):
    first_client, first_server = authority.enroll("dana")
    second_client, second_server = authority.enroll("dana")
    assert first_client.client_exponent != second_client.client_exponent
    assert split_is_consistent(master_secret, second_client, second_server, params)
    assert not split_is_consistent(master_secret, first_client, second_server, params)
    assert authority.issued_users == ["dana"]


def test_forget(authority):
    authority.enroll("dana")
    assert authority.forget("dana")
    assert not authority.forget("dana")


def test_authority_state_round_trip(authority, tmp_path):
    authority.enroll("dana")
    path = authority.save(tmp_path / "tkma.json")
    if os.name == "posix":
        assert path.stat().st_mode & 0o777 == 0o600
    loaded = KeyAuthority.load(path)
    assert loaded.params == authority.params
    assert loaded.issued_users == ["dana"]


@pytest.mark.skipif(os.name != "posix", reason="file modes are POSIX only")
def test_world_readable_key_file_is_refused(users, tmp_path):
    path = key_files.write_client_keyset(tmp_path / "alice.json", users["alice"].client)
    os.chmod(path, 0o644)
    with pytest.raises(InvalidParametersError):
        key_files.read_client_keyset(path)


def test_public_params_file(params, tmp_path):
    path = key_files.write_public_params(tmp_path / "params.json", params)
    assert key_files.read_public_params(path) == params


def test_missing_key_file(tmp_path):
    with pytest.raises(InvalidParametersError):
        key_files.read_server_keyset(tmp_path / "nope.json")


def test_authority_repr_hides_secrets(authority, master_secret):
    assert str(master_secret.master_exponent) not in repr(authority)


# ── Admin User ────────────────────────────────────────────────────────────────


def test_role_assignment_bundle_shape(params, users, rng):
    policy = RoleAssignmentPolicy(requester_id="alice", roles=["Doctor", "Nurse", "Intern"])
    bundle = client_toolkit.encrypt_role_assignment(policy, users["admin"].client, params, rng)
    assert bundle.kind is BundleKind.ROLE_ASSIGNMENT
    assert bundle.issuer_id == "admin"
    assert len(bundle.payload.roles) == 3
    assert bundle.payload.condition is None


def test_permission_assignment_counts(params, users, rng):
    policy = PermissionAssignmentPolicy(
        role="Doctor",
        permissions=[Permission(action="read", target=f"record-{i}") for i in range(4)],
        condition=ConditionTree(root=EqualsNode(attribute="Location", equals="ward")),
    )
    bundle = client_toolkit.encrypt_permission_assignment(policy, users["admin"].client, params, rng)
    assert payload_counts(bundle.payload) == (1 + 2 * 4 + 1, 0)


def test_condition_keeps_topology(params, users, rng):
    tree = ConditionTree(
        root=GateNode(
            gate=Gate.OR,
            children=[
                EqualsNode(attribute="Shift", equals="day"),
                CompareNode(attribute="Hour", op="=", threshold=5, bit_width=3),
            ],
        )
    )
    encrypted = client_toolkit.encrypt_condition(tree, users["admin"].client, params, rng)
    assert encrypted.root.gate is Gate.OR
    assert isinstance(encrypted.root.children[1], ClientEncryptedGate)
    assert tree_leaf_count(encrypted) == 1 + 3


def test_threshold_gate_is_refused_before_encryption(params, users, rng):
    tree = ConditionTree(
        root=GateNode(gate=Gate.THRESHOLD, k=1, children=[LeafToken(token="a"), LeafToken(token="b")])
    )
    with pytest.raises(UnsupportedGateError):
        client_toolkit.encrypt_condition(tree, users["admin"].client, params, rng)


def test_hierarchy_bundle(params, users, rng):
    graph = RoleHierarchyGraph(roles=["Doctor", "Intern"], extends={"Doctor": ["Intern"]})
    bundle = client_toolkit.encrypt_hierarchy(graph, users["admin"].client, params, rng)
    assert bundle.payload.edges == [(0, 1)]
    assert payload_counts(bundle.payload) == (2, 2)


def test_cyclic_hierarchy_is_refused(params, users, rng):
    graph = RoleHierarchyGraph(roles=["a", "b"], extends={"a": ["b"], "b": ["a"]})
    with pytest.raises(CycleDetectedError):
        client_toolkit.encrypt_hierarchy(graph, users["admin"].client, params, rng)


def test_bundle_carries_no_plaintext(params, users, rng):
    policy = PermissionAssignmentPolicy(role="Cardiologist", permissions=[Permission(action="prescribe", target="ward-db")])
    text = client_toolkit.encrypt_policy(policy, users["admin"].client, params, rng).model_dump_json()
    for word in ("Cardiologist", "prescribe", "ward-db"):
        assert word not in text


# ── Requester / PIP ───────────────────────────────────────────────────────────


def test_requests_carry_trapdoors(params, users, rng):
    act = client_toolkit.make_activation_request(users["alice"].client, "Doctor", params, rng)
    req = client_toolkit.make_access_request(users["alice"].client, "Doctor", "read", "record", params, rng)
    assert act.requester_id == req.requester_id == "alice"
    assert len({req.role_td, req.action_td, req.target_td}) == 3
    assert act.correlation_id != req.correlation_id


def test_pip_trapdoor_counts(params, users, rng):
    assertions = [
        AttributeAssertion(name="Location", value="Cardiology-ward"),
        AttributeAssertion(name="AT", value=10, bit_width=5),
    ]
    assert len(client_toolkit.pip_collect(assertions, users["pip"].client, params, rng)) == 6
    batch = client_toolkit.make_attribute_batch(assertions, users["pip"].client, params, "cid-1", rng)
    assert batch.pip_id == "pip" and batch.correlation_id == "cid-1"
