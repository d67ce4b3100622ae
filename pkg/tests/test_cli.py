from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from app.cli.commands import main, parse_assertion
from app.cli.exit_codes import EXIT_DENY, EXIT_INVALID, EXIT_KEY_NOT_FOUND, EXIT_OK
from app.cli.targets import ServiceTarget
from app.core.exceptions import InvalidAssertionError
from app.main import create_app
from app.services.attribute_broker import AttributeBroker
from app.services.engine import ServiceProvider
from app.services.provider_service import ServiceContainer

POLICY = {
    "policies": [
        {
            "kind": "role_assignment",
            "requester_id": "alice",
            "roles": ["Doctor"],
            "condition": {"root": {"attribute": "Location", "equals": "Cardiology-ward"}},
        },
        {
            "kind": "permission_assignment",
            "role": "Doctor",
            "permissions": [{"action": "read", "target": "chart"}],
        },
    ]
}


class Workspace:
    def __init__(self, tmp_path, capsys, sp_args) -> None:
        self.dir = tmp_path
        self.capsys = capsys
        self.sp_args = sp_args
        self.target_factory = None

    def path(self, name: str) -> str:
        return str(self.dir / name)

    def run(self, *argv: str) -> tuple[int, dict | None]:
        self.capsys.readouterr()
        code = main(list(argv), target_factory=self.target_factory)
        out = self.capsys.readouterr().out
        return code, json.loads(out) if out.strip() else None

    def keys(self, user: str) -> list[str]:
        return ["--params", self.path("params.json"), "--keys", self.path(f"{user}.client.json")]

    def bootstrap(self) -> None:
        code, out = self.run(
            "tkma-init", "--profile", "test", "--authority", self.path("tkma.json"), "--params-out", self.path("params.json")
        )
        assert code == EXIT_OK and out["order_bits"] >= 160
        assert self.run("sp-params", *self.sp_args, "--params", self.path("params.json"))[0] == EXIT_OK
        for user in ("admin", "alice", "pip"):
            code, out = self.run(
                "tkma-keygen",
                *self.sp_args,
                "--authority", self.path("tkma.json"),
                "--user", user,
                "--client-out", self.path(f"{user}.client.json"),
                "--server-out", self.path(f"{user}.server.json"),
            )
            assert code == EXIT_OK and out["installed"]["ok"] is True
        (self.dir / "policy.json").write_text(json.dumps(POLICY))
        code, out = self.run("admin-deploy", *self.sp_args, *self.keys("admin"), "--policy", self.path("policy.json"))
        assert code == EXIT_OK and len(out["deployed"]) == 2

    def activate(self, location: str) -> tuple[int, dict | None]:
        return self.run(
            "requester-activate",
            *self.sp_args,
            *self.keys("alice"),
            "--role", "Doctor",
            "--pip-keys", self.path("pip.client.json"),
            "--assert", f"Location={location}",
        )

    def access(self, action: str = "read") -> tuple[int, dict | None]:
        return self.run(
            "requester-access", *self.sp_args, *self.keys("alice"),
            "--role", "Doctor", "--action", action, "--target", "chart",
        )


@pytest.fixture
def state_ws(tmp_path, capsys, fresh_settings) -> Workspace:
    fresh_settings.setenv("SP_ADMIN_API_KEY", "")
    ws = Workspace(tmp_path, capsys, ["--state", str(tmp_path / "sp.json")])
    ws.bootstrap()
    return ws


@pytest.fixture
def service_ws(tmp_path, capsys, fresh_settings) -> Workspace:
    fresh_settings.setenv("SP_ADMIN_API_KEY", "")
    broker = AttributeBroker(timeout_seconds=0)
    container = ServiceContainer(sp=ServiceProvider(attribute_source=broker), broker=broker)
    with TestClient(create_app(container=container)) as client:
        ws = Workspace(tmp_path, capsys, ["--service", "http://sp.test"])
        ws.target_factory = lambda args: ServiceTarget(args.service, admin_key=args.admin_key, client=client)
        ws.bootstrap()
        yield ws


@pytest.mark.parametrize("ws_fixture", ["state_ws", "service_ws"])
def test_flow_exit_codes(ws_fixture, request):
    ws = request.getfixturevalue(ws_fixture)

    code, out = ws.activate("Lobby")
    assert code == EXIT_DENY and out["reason"] == "condition-false"
    assert ws.access()[0] == EXIT_DENY

    code, out = ws.activate("Cardiology-ward")
    assert code == EXIT_OK and out["outcome"] == "permit"
    assert ws.access() == (EXIT_OK, {"outcome": "permit", "reason": None, "via_base_role": False})
    code, out = ws.access("write")
    assert code == EXIT_DENY and out["reason"] == "no-permission"

    code, out = ws.run("sp-revoke", *ws.sp_args, "--user", "alice")
    assert code == EXIT_OK and out["removed"] is True
    assert ws.access()[0] == EXIT_KEY_NOT_FOUND
    assert ws.activate("Cardiology-ward")[0] == EXIT_KEY_NOT_FOUND


def test_state_file_carries_sessions_between_commands(state_ws):
    assert state_ws.activate("Cardiology-ward")[0] == EXIT_OK
    code, _ = state_ws.run(
        "requester-deactivate", *state_ws.sp_args, *state_ws.keys("alice"), "--role", "Doctor"
    )
    assert code == EXIT_OK
    assert state_ws.access()[1]["reason"] == "no-active-role"


def test_pip_batch_file(state_ws):
    code, out = state_ws.run(
        "pip-send",
        *state_ws.keys("pip"),
        "--correlation-id", "corr-42",
        "--assert", "Location=Cardiology-ward",
        "--out", state_ws.path("batch.json"),
    )
    assert code == EXIT_OK and out["trapdoors"] == 1
    code, out = state_ws.run(
        "requester-activate",
        *state_ws.sp_args,
        *state_ws.keys("alice"),
        "--role", "Doctor",
        "--correlation-id", "corr-42",
        "--attributes", state_ws.path("batch.json"),
    )
    assert code == EXIT_OK


def test_pip_send_refuses_a_state_file(state_ws):
    before = (state_ws.dir / "sp.json").read_text()
    code, out = state_ws.run(
        "pip-send",
        *state_ws.sp_args,
        *state_ws.keys("pip"),
        "--correlation-id", "corr-7",
        "--assert", "Location=Cardiology-ward",
    )
    assert code == EXIT_INVALID and out is None
    assert (state_ws.dir / "sp.json").read_text() == before


def test_batch_file_is_bound_to_its_decision(state_ws):
    state_ws.run(
        "pip-send",
        *state_ws.keys("pip"),
        "--correlation-id", "corr-1",
        "--assert", "Location=Cardiology-ward",
        "--out", state_ws.path("batch.json"),
    )
    activate = [
        "requester-activate", *state_ws.sp_args, *state_ws.keys("alice"),
        "--role", "Doctor", "--attributes", state_ws.path("batch.json"),
    ]
    assert state_ws.run(*activate, "--correlation-id", "corr-2")[0] == EXIT_INVALID
    assert state_ws.run(*activate, "--correlation-id", "corr-1")[0] == EXIT_OK

    # The state file remembers the batch across commands.
    state_ws.run("requester-deactivate", *state_ws.sp_args, *state_ws.keys("alice"), "--role", "Doctor")
    code, out = state_ws.run(*activate, "--correlation-id", "corr-1")
    assert code == EXIT_DENY and out["reason"] == "condition-unresolved"


def test_conditional_activation_without_attributes_is_unresolved(state_ws):
    code, out = state_ws.run("requester-activate", *state_ws.sp_args, *state_ws.keys("alice"), "--role", "Doctor")
    assert code == EXIT_DENY and out["reason"] == "condition-unresolved"


def test_snapshot_and_restore_from_file(state_ws):
    code, taken = state_ws.run("sp-snapshot", *state_ws.sp_args)
    assert code == EXIT_OK
    other = ["--state", state_ws.path("copy.json")]
    code, restored = state_ws.run("sp-restore", *other, "--from", state_ws.path("sp.json"))
    assert code == EXIT_OK
    assert restored == {"restored": True, "digest": taken["digest"]}


def test_remove_policy(state_ws):
    code, _ = state_ws.run("admin-remove", *state_ws.sp_args, "--kind", "role_assignment", "--id", "alice")
    assert code == EXIT_OK
    code, out = state_ws.activate("Cardiology-ward")
    assert code == EXIT_DENY and out["reason"] == "no-role-match"
    code, _ = state_ws.run("admin-remove", *state_ws.sp_args, "--kind", "role_assignment", "--id", "alice")
    assert code == EXIT_INVALID


def test_invalid_invocations(state_ws):
    assert state_ws.run("requester-access", *state_ws.keys("alice"), "--role", "Doctor")[0] == EXIT_INVALID
    assert state_ws.run("no-such-command")[0] == EXIT_INVALID
    (state_ws.dir / "bad.json").write_text(json.dumps({"kind": "role_assignment", "requester_id": "x", "roles": []}))
    code, _ = state_ws.run(
        "admin-deploy", *state_ws.sp_args, *state_ws.keys("admin"), "--policy", state_ws.path("bad.json")
    )
    assert code == EXIT_INVALID


def test_threshold_policy_sends_nothing(state_ws):
    threshold = {
        "kind": "permission_assignment",
        "role": "Doctor",
        "permissions": [{"action": "sign", "target": "chart"}],
        "condition": {
            "root": {
                "gate": "THRESHOLD",
                "k": 1,
                "children": [{"attribute": "a", "equals": "x"}, {"attribute": "b", "equals": "y"}],
            }
        },
    }
    (state_ws.dir / "threshold.json").write_text(json.dumps([POLICY["policies"][1], threshold]))
    before = (state_ws.dir / "sp.json").read_text()
    code, _ = state_ws.run(
        "admin-deploy", *state_ws.sp_args, *state_ws.keys("admin"), "--policy", state_ws.path("threshold.json")
    )
    assert code == EXIT_INVALID
    assert (state_ws.dir / "sp.json").read_text() == before


def test_tkma_init_refuses_to_overwrite(state_ws):
    code, _ = state_ws.run(
        "tkma-init", "--authority", state_ws.path("tkma.json"), "--params-out", state_ws.path("p2.json")
    )
    assert code == EXIT_INVALID


def test_output_never_contains_key_material(state_ws):
    secret = json.loads((state_ws.dir / "alice.client.json").read_text())
    code, out = state_ws.activate("Cardiology-ward")
    text = json.dumps(out)
    for value in secret.values():
        if isinstance(value, str) and len(value) > 8:
            assert value not in text


def test_parse_assertion():
    assert parse_assertion("age=30/8").value == 30
    assert parse_assertion("age=30/8").bit_width == 8
    assert parse_assertion("Location=ward/3b").value == "ward/3b"
    with pytest.raises(InvalidAssertionError):
        parse_assertion("missing-separator")
