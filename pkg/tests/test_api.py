from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from app.main import create_app
from app.schemas.policy import (
    AttributeAssertion,
    ConditionTree,
    EqualsNode,
    Permission,
    PermissionAssignmentPolicy,
    RoleAssignmentPolicy,
    RoleHierarchyGraph,
)
from app.services import client_toolkit
from app.services.attribute_broker import AttributeBroker
from app.services.engine import ServiceProvider
from app.services.provider_service import ServiceContainer

ADMIN_KEY = "operator-secret"


def _json(model) -> dict:
    return model.model_dump(mode="json")


@pytest.fixture
def container() -> ServiceContainer:
    broker = AttributeBroker(timeout_seconds=0)
    return ServiceContainer(sp=ServiceProvider(attribute_source=broker), broker=broker)


@pytest.fixture
def client(container, fresh_settings):
    fresh_settings.setenv("SP_ADMIN_API_KEY", "")
    with TestClient(create_app(container=container)) as c:
        yield c


@pytest.fixture
def installed(client, params, users):
    assert client.put("/api/v1/params", json=_json(params)).status_code == 200
    for enrolled in users.values():
        assert client.put("/api/v1/keys", json=_json(enrolled.server)).status_code == 200
    return client


def _deploy(client, document, users, params, rng, headers=None):
    bundle = client_toolkit.encrypt_policy(document, users["admin"].client, params, rng)
    return client.post("/api/v1/policies", json=_json(bundle), headers=headers or {})


def _activate(client, user, role, users, params, rng, headers=None):
    req = client_toolkit.make_activation_request(users[user].client, role, params, rng)
    return client.post(
        "/api/v1/requests/activate",
        json={"request": _json(req), "attributes": None},
        headers=headers or {},
    )


def _access(client, user, role, action, target, users, params, rng):
    req = client_toolkit.make_access_request(users[user].client, role, action, target, params, rng)
    return client.post("/api/v1/requests/access", json={"request": _json(req), "attributes": None})


@pytest.fixture
def doctor_world(installed, users, params, rng):
    _deploy(installed, RoleAssignmentPolicy(requester_id="alice", roles=["Doctor"]), users, params, rng)
    _deploy(
        installed,
        PermissionAssignmentPolicy(role="Employee", permissions=[Permission(action="read", target="timesheet")]),
        users,
        params,
        rng,
    )
    _deploy(
        installed,
        PermissionAssignmentPolicy(role="Doctor", permissions=[Permission(action="write", target="chart")]),
        users,
        params,
        rng,
    )
    _deploy(installed, RoleHierarchyGraph(roles=["Employee", "Doctor"], extends={"Doctor": ["Employee"]}), users, params, rng)
    return installed


# ── Health ────────────────────────────────────────────────────────────────────


def test_liveness(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_readiness_follows_params(client, params):
    resp = client.get("/health/ready")
    assert resp.status_code == 503
    assert resp.json()["checks"]["engine"] == "not-configured"
    client.put("/api/v1/params", json=_json(params))
    assert client.get("/health/ready").status_code == 200


# ── Parameters and keys ───────────────────────────────────────────────────────


def test_params_round_trip(installed, params):
    assert installed.get("/api/v1/params").json() == _json(params)


def test_unconfigured_engine_is_503(client, users):
    assert client.get("/api/v1/params").status_code == 503
    assert client.put("/api/v1/keys", json=_json(users["alice"].server)).status_code == 503


def test_operator_key_is_enforced(container, fresh_settings, params):
    fresh_settings.setenv("SP_ADMIN_API_KEY", ADMIN_KEY)
    with TestClient(create_app(container=container)) as c:
        assert c.put("/api/v1/params", json=_json(params)).status_code == 401
        wrong = c.put("/api/v1/params", json=_json(params), headers={"X-Admin-Key": "nope"})
        assert wrong.status_code == 401
        ok = c.put("/api/v1/params", json=_json(params), headers={"X-Admin-Key": ADMIN_KEY})
        assert ok.status_code == 200
        assert c.post("/api/v1/admin/revoke/alice").status_code == 401


def test_policy_removal_needs_operator_key(container, fresh_settings, params, users, rng):
    fresh_settings.setenv("SP_ADMIN_API_KEY", ADMIN_KEY)
    operator = {"X-Admin-Key": ADMIN_KEY}
    with TestClient(create_app(container=container)) as c:
        c.put("/api/v1/params", json=_json(params), headers=operator)
        for enrolled in users.values():
            c.put("/api/v1/keys", json=_json(enrolled.server), headers=operator)
        _deploy(c, RoleAssignmentPolicy(requester_id="alice", roles=["Doctor"]), users, params, rng)
        _deploy(c, RoleHierarchyGraph(roles=["Employee", "Doctor"], extends={"Doctor": ["Employee"]}), users, params, rng)
        before = c.get("/api/v1/policies/digest").json()

        for path in (
            "/api/v1/policies/role-assignments/alice",
            "/api/v1/policies/permission-assignments/anything",
            "/api/v1/policies/hierarchy",
        ):
            assert c.delete(path).status_code == 401
            assert c.delete(path, headers={"X-Admin-Key": "nope"}).status_code == 401
        assert c.get("/api/v1/policies/digest").json() == before

        assert c.delete("/api/v1/policies/role-assignments/alice", headers=operator).json()["ok"] is True
        assert c.delete("/api/v1/policies/hierarchy", headers=operator).status_code == 200


def test_malformed_params_are_400_or_422(client):
    resp = client.put("/api/v1/params", json={"p": "17", "q": "4", "g": "2"})
    assert resp.status_code in (400, 422)


# ── Policies ──────────────────────────────────────────────────────────────────


def test_deploy_returns_201(installed, users, params, rng):
    resp = _deploy(installed, RoleAssignmentPolicy(requester_id="bob", roles=["Nurse", "Clerk"]), users, params, rng)
    assert resp.status_code == 201
    body = resp.json()
    assert body["kind"] == "role_assignment"
    assert body["policy_id"] == "bob"
    assert body["stored_ciphertexts"] == 2


def test_deploy_principal_mismatch(installed, users, params, rng):
    resp = _deploy(
        installed,
        RoleAssignmentPolicy(requester_id="bob", roles=["Nurse"]),
        users,
        params,
        rng,
        headers={"X-Principal": "bob"},
    )
    assert resp.status_code == 403


def test_deploy_from_unknown_issuer(client, params, users, rng):
    client.put("/api/v1/params", json=_json(params))
    resp = _deploy(client, RoleAssignmentPolicy(requester_id="bob", roles=["Nurse"]), users, params, rng)
    assert resp.status_code == 403
    assert resp.json()["detail"]["reason"] == "key-not-found"


def test_remove_unknown_policy_is_404(installed):
    assert installed.delete("/api/v1/policies/permission-assignments/nope").status_code == 404
    assert installed.delete("/api/v1/policies/role-assignments/nobody").status_code == 404
    assert installed.delete("/api/v1/policies/hierarchy").status_code == 404


def test_policy_digest_changes_on_deploy(installed, users, params, rng):
    before = installed.get("/api/v1/policies/digest").json()
    _deploy(installed, RoleAssignmentPolicy(requester_id="bob", roles=["Nurse"]), users, params, rng)
    after = installed.get("/api/v1/policies/digest").json()
    assert before["digest"] != after["digest"]


# ── Requester flows ───────────────────────────────────────────────────────────


def test_activate_and_access(doctor_world, users, params, rng):
    act = _activate(doctor_world, "alice", "Doctor", users, params, rng)
    assert act.status_code == 200
    assert act.json()["outcome"] == "permit"

    direct = _access(doctor_world, "alice", "Doctor", "write", "chart", users, params, rng).json()
    assert direct == {"outcome": "permit", "reason": None, "via_base_role": False}

    inherited = _access(doctor_world, "alice", "Doctor", "read", "timesheet", users, params, rng).json()
    assert inherited["outcome"] == "permit"
    assert inherited["via_base_role"] is True

    denied = _access(doctor_world, "alice", "Doctor", "delete", "chart", users, params, rng).json()
    assert denied == {"outcome": "deny", "reason": "no-permission", "via_base_role": False}


def test_access_without_activation(doctor_world, users, params, rng):
    resp = _access(doctor_world, "alice", "Doctor", "write", "chart", users, params, rng)
    assert resp.json()["reason"] == "no-active-role"


def test_activation_principal_mismatch(doctor_world, users, params, rng):
    resp = _activate(doctor_world, "alice", "Doctor", users, params, rng, headers={"X-Principal": "bob"})
    assert resp.status_code == 403
    ok = _activate(doctor_world, "alice", "Doctor", users, params, rng, headers={"X-Principal": "alice"})
    assert ok.status_code == 200


def test_deactivate(doctor_world, users, params, rng):
    _activate(doctor_world, "alice", "Doctor", users, params, rng)
    req = client_toolkit.make_deactivation_request(users["alice"].client, "Doctor", params, rng)
    assert doctor_world.post("/api/v1/requests/deactivate", json=_json(req)).json()["ok"] is True
    again = doctor_world.post("/api/v1/requests/deactivate", json=_json(req)).json()
    assert again["ok"] is False


def test_revocation_over_http(doctor_world, users, params, rng):
    _activate(doctor_world, "alice", "Doctor", users, params, rng)
    revoked = doctor_world.post("/api/v1/admin/revoke/alice").json()
    assert revoked == {"user_id": "alice", "removed": True}

    resp = _access(doctor_world, "alice", "Doctor", "write", "chart", users, params, rng)
    assert resp.status_code == 403
    assert resp.json()["detail"] == {"reason": "key-not-found", "user_id": "alice"}
    assert _activate(doctor_world, "alice", "Doctor", users, params, rng).status_code == 403


def test_pushed_attributes_are_parked_for_the_decision(installed, users, params, rng):
    ward = ConditionTree(root=EqualsNode(attribute="Location", equals="Cardiology-ward"))
    _deploy(installed, RoleAssignmentPolicy(requester_id="bob", roles=["Nurse"], condition=ward), users, params, rng)

    req = client_toolkit.make_activation_request(users["bob"].client, "Nurse", params, rng)
    batch = client_toolkit.make_attribute_batch(
        [AttributeAssertion(name="Location", value="Cardiology-ward")],
        users["pip"].client,
        params,
        req.correlation_id,
        rng,
    )
    pushed = installed.post("/api/v1/attributes", json=_json(batch), headers={"X-Principal": "pip"})
    assert pushed.status_code == 202
    assert pushed.json()["detail"] == "parked"

    decision = installed.post("/api/v1/requests/activate", json={"request": _json(req)}).json()
    assert decision["outcome"] == "permit"

    late = client_toolkit.make_activation_request(users["bob"].client, "Nurse", params, rng)
    unresolved = installed.post("/api/v1/requests/activate", json={"request": _json(late)}).json()
    assert unresolved["reason"] == "condition-unresolved"


def test_malformed_request_body(installed):
    resp = installed.post("/api/v1/requests/access", json={"request": {"requester_id": "alice"}})
    assert resp.status_code == 422


# ── Snapshots ─────────────────────────────────────────────────────────────────


def test_snapshot_and_restore_document(doctor_world, container):
    taken = doctor_world.post("/api/v1/admin/snapshot").json()
    assert taken["location"] is None
    document = container.sp.snapshot().model_dump(mode="json")

    fresh = ServiceContainer(sp=ServiceProvider(), broker=AttributeBroker(timeout_seconds=0))
    with TestClient(create_app(container=fresh)) as other:
        restored = other.post("/api/v1/admin/restore", json=document).json()
    assert restored["restored"] is True
    assert restored["digest"] == taken["digest"]
