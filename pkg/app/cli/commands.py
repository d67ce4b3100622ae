"""
app/cli/commands.py

  tkma-init            create group parameters + master secret
  tkma-keygen          enrol a user (writes both key halves, optionally installs
                       the server half)
  sp-params            install public parameters on the service provider
  sp-install-key       install a server key-set file
  admin-deploy         encrypt and deploy a JSON policy file
  admin-remove         remove a deployed policy
  requester-activate   ACT
  requester-deactivate drop an active role
  requester-access     REQ
  pip-send             attribute batch for one decision (deliver or write out)
  sp-revoke            delete a user's server key set
  sp-snapshot          persist the store
  sp-restore           reload the store (optionally from a snapshot file)
  serve                run the HTTP service

SP-facing commands take --service URL or --state FILE. Output is JSON on
stdout, never key material; exit codes are in app/cli/exit_codes.py.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import httpx
from pydantic import ValidationError

from app.cli.exit_codes import (
    EXIT_DENY,
    EXIT_INVALID,
    EXIT_KEY_NOT_FOUND,
    EXIT_OK,
    EXIT_TRANSPORT,
)
from app.cli.targets import ServiceResponseError, ServiceTarget, StateTarget, Target
from app.core.config import get_settings
from app.core.exceptions import (
    EncryptedRBACError,
    InvalidAssertionError,
    InvalidParametersError,
    InvalidPolicyError,
    KeyNotFoundError,
    MalformedBundleError,
    MalformedElementError,
    PrincipalMismatchError,
    UnknownPolicyError,
    UnsupportedSecurityParameter,
)
from app.core.logging_config import configure_logging
from app.models.enums import EndpointOp
from app.schemas.policy import AttributeAssertion
from app.schemas.requests import AttributeBatch, new_correlation_id
from app.services import client_toolkit, key_files
from app.services.client_toolkit import KeyAuthority
from app.services.policy_model import load_policy_document
from app.services.snapshot_service import parse_snapshot
from app.services.utils.atomic_file import atomic_write_text, read_text

logger = logging.getLogger("app.cli")

_INVALID_INPUT = (
    ValidationError,
    InvalidPolicyError,
    InvalidParametersError,
    InvalidAssertionError,
    MalformedBundleError,
    MalformedElementError,
    UnknownPolicyError,
    PrincipalMismatchError,
    UnsupportedSecurityParameter,
)

TargetFactory = Callable[[argparse.Namespace], Target]


# ── Helpers ───────────────────────────────────────────────────────────────────


def _emit(result: Any) -> None:
    print(json.dumps(result, indent=2, sort_keys=True))


def _security_param(value: str) -> str | int:
    return int(value) if value.isdigit() else value


def parse_assertion(text: str) -> AttributeAssertion:
    """
    NAME=VALUE for strings, NAME=VALUE/WIDTH for numbers (age=30/8).
    """
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise InvalidAssertionError(f"expected NAME=VALUE, got {text!r}")
    number, slash, width = value.rpartition("/")
    if slash and number.isdigit() and width.isdigit():
        return AttributeAssertion(name=name, value=int(number), bit_width=int(width))
    return AttributeAssertion(name=name, value=value)


def _inline_attributes(args: argparse.Namespace, correlation_id: str) -> Optional[AttributeBatch]:
    if args.attributes:
        batch = AttributeBatch.model_validate_json(read_text(args.attributes))
        if batch.correlation_id != correlation_id:
            raise InvalidAssertionError(
                f"attribute batch is bound to decision {batch.correlation_id!r}, not {correlation_id!r}; "
                "pass the same --correlation-id"
            )
        return batch
    if args.assertions:
        if not args.pip_keys:
            raise InvalidAssertionError("--assert needs --pip-keys")
        pip_keys = key_files.read_client_keyset(args.pip_keys)
        params = key_files.read_public_params(args.params)
        assertions = [parse_assertion(a) for a in args.assertions]
        return client_toolkit.make_attribute_batch(assertions, pip_keys, params, correlation_id)
    return None


def _decision(result: dict[str, Any]) -> int:
    _emit(result)
    if result.get("outcome") == "deny":
        print(f"denied: {result.get('reason')}", file=sys.stderr)
        return EXIT_DENY
    return EXIT_OK


def _default_target(args: argparse.Namespace) -> Target:
    if args.service:
        return ServiceTarget(args.service, admin_key=args.admin_key)
    return StateTarget(args.state)


# ── TKMA ──────────────────────────────────────────────────────────────────────


def cmd_tkma_init(args: argparse.Namespace, target: TargetFactory) -> int:
    state_path = Path(args.authority)
    if state_path.exists() and not args.force:
        raise InvalidParametersError(f"{state_path} exists; pass --force to replace the authority")
    authority = KeyAuthority.create(_security_param(args.profile))
    authority.save(state_path)
    key_files.write_public_params(args.params_out, authority.params)
    _emit(
        {
            "authority": str(state_path),
            "params": str(args.params_out),
            "group_bits": authority.params.p.bit_length(),
            "order_bits": authority.params.q.bit_length(),
        }
    )
    return EXIT_OK


def cmd_tkma_keygen(args: argparse.Namespace, target: TargetFactory) -> int:
    authority = KeyAuthority.load(args.authority)
    client, server = authority.enroll(args.user)
    key_files.write_client_keyset(args.client_out, client)
    key_files.write_server_keyset(args.server_out, server)
    authority.save(args.authority)
    out: dict[str, Any] = {
        "user_id": args.user,
        "client_keys": str(args.client_out),
        "server_keys": str(args.server_out),
    }
    if args.service or args.state:
        out["installed"] = target(args).call(
            EndpointOp.INSTALL_KEYSET, server.model_dump(mode="json")
        )
    _emit(out)
    return EXIT_OK


# ── SP operator ───────────────────────────────────────────────────────────────


def cmd_sp_params(args: argparse.Namespace, target: TargetFactory) -> int:
    params = key_files.read_public_params(args.params)
    _emit(target(args).call(EndpointOp.INSTALL_PARAMS, params.model_dump(mode="json")))
    return EXIT_OK


def cmd_sp_install_key(args: argparse.Namespace, target: TargetFactory) -> int:
    server = key_files.read_server_keyset(args.server_keys)
    _emit(target(args).call(EndpointOp.INSTALL_KEYSET, server.model_dump(mode="json")))
    return EXIT_OK


def cmd_sp_revoke(args: argparse.Namespace, target: TargetFactory) -> int:
    _emit(target(args).call(EndpointOp.REVOKE, {"user_id": args.user}))
    return EXIT_OK


def cmd_sp_snapshot(args: argparse.Namespace, target: TargetFactory) -> int:
    _emit(target(args).call(EndpointOp.SNAPSHOT, {}))
    return EXIT_OK


def cmd_sp_restore(args: argparse.Namespace, target: TargetFactory) -> int:
    body: dict[str, Any] = {}
    if args.source:
        document = parse_snapshot(read_text(args.source), str(args.source))
        body["document"] = document.model_dump(mode="json")
    _emit(target(args).call(EndpointOp.RESTORE, body))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, target: TargetFactory) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run(
        "app.main:app",
        host=args.host or settings.SP_LISTEN_HOST,
        port=args.port or settings.SP_LISTEN_PORT,
    )
    return EXIT_OK


# ── Admin User ────────────────────────────────────────────────────────────────


def cmd_admin_deploy(args: argparse.Namespace, target: TargetFactory) -> int:
    params = key_files.read_public_params(args.params)
    keyset = key_files.read_client_keyset(args.keys)
    documents = load_policy_document(args.policy)
    # Encrypt everything first: a THRESHOLD gate aborts before anything is sent.
    bundles = [client_toolkit.encrypt_policy(doc, keyset, params) for doc in documents]
    sp = target(args)
    results = [
        sp.call(EndpointOp.DEPLOY_POLICY, bundle.model_dump(mode="json"), principal=keyset.user_id)
        for bundle in bundles
    ]
    _emit({"deployed": results})
    return EXIT_OK


def cmd_admin_remove(args: argparse.Namespace, target: TargetFactory) -> int:
    _emit(target(args).call(EndpointOp.REMOVE_POLICY, {"kind": args.kind, "id": args.id}))
    return EXIT_OK


# ── Requester ─────────────────────────────────────────────────────────────────


def cmd_requester_activate(args: argparse.Namespace, target: TargetFactory) -> int:
    params = key_files.read_public_params(args.params)
    keyset = key_files.read_client_keyset(args.keys)
    correlation_id = args.correlation_id or new_correlation_id()
    req = client_toolkit.make_activation_request(keyset, args.role, params, correlation_id=correlation_id)
    attributes = _inline_attributes(args, correlation_id)
    body = {
        "request": req.model_dump(mode="json"),
        "attributes": attributes.model_dump(mode="json") if attributes else None,
    }
    return _decision(target(args).call(EndpointOp.ACTIVATE, body, principal=keyset.user_id))


def cmd_requester_deactivate(args: argparse.Namespace, target: TargetFactory) -> int:
    params = key_files.read_public_params(args.params)
    keyset = key_files.read_client_keyset(args.keys)
    req = client_toolkit.make_deactivation_request(keyset, args.role, params)
    _emit(target(args).call(EndpointOp.DEACTIVATE, req.model_dump(mode="json"), principal=keyset.user_id))
    return EXIT_OK


def cmd_requester_access(args: argparse.Namespace, target: TargetFactory) -> int:
    params = key_files.read_public_params(args.params)
    keyset = key_files.read_client_keyset(args.keys)
    correlation_id = args.correlation_id or new_correlation_id()
    req = client_toolkit.make_access_request(
        keyset, args.role, args.action, args.resource, params, correlation_id=correlation_id
    )
    attributes = _inline_attributes(args, correlation_id)
    body = {
        "request": req.model_dump(mode="json"),
        "attributes": attributes.model_dump(mode="json") if attributes else None,
    }
    return _decision(target(args).call(EndpointOp.ACCESS, body, principal=keyset.user_id))


# ── PIP ───────────────────────────────────────────────────────────────────────


def cmd_pip_send(args: argparse.Namespace, target: TargetFactory) -> int:
    if not args.out:
        if args.state:
            # A parked batch lives in broker memory only and would be gone when this command exits.
            raise InvalidAssertionError(
                "pip-send cannot park a batch in a --state file; write it with --out and pass "
                "it to requester-activate / requester-access with --attributes"
            )
        if not args.service:
            raise InvalidAssertionError("pip-send needs --out or --service")
    params = key_files.read_public_params(args.params)
    keyset = key_files.read_client_keyset(args.keys)
    assertions = [parse_assertion(a) for a in args.assertions]
    batch = client_toolkit.make_attribute_batch(assertions, keyset, params, args.correlation_id)
    if args.out:
        atomic_write_text(args.out, batch.model_dump_json(indent=2) + "\n")
        _emit({"written": str(args.out), "trapdoors": len(batch.trapdoors)})
        return EXIT_OK
    _emit(target(args).call(EndpointOp.ATTRIBUTES, batch.model_dump(mode="json"), principal=keyset.user_id))
    return EXIT_OK


# ── Parser ────────────────────────────────────────────────────────────────────


def _target_parent(required: bool) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group(required=required)
    group.add_argument("--service", metavar="URL", help="base URL of a running service provider")
    group.add_argument("--state", metavar="FILE", type=Path, help="in-process engine persisted in FILE")
    parent.add_argument(
        "--admin-key",
        default=None,
        help="X-Admin-Key for operator ops (default: SP_ADMIN_API_KEY)",
    )
    return parent


def _client_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--params", type=Path, required=True, help="public parameters file")
    parent.add_argument("--keys", type=Path, required=True, help="client key-set file (mode 0600)")
    return parent


def _attribute_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--correlation-id", default=None, help="binds a PIP batch to this decision")
    parser.add_argument("--attributes", type=Path, default=None, help="batch file written by pip-send --out")
    parser.add_argument("--pip-keys", type=Path, default=None, help="PIP key set for --assert")
    parser.add_argument(
        "--assert",
        dest="assertions",
        action="append",
        default=[],
        metavar="NAME=VALUE[/WIDTH]",
        help="contextual attribute sent inline (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.cli",
        description="Encrypted RBAC: TKMA, admin, requester, PIP and SP operator commands",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO on stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    sp_required = _target_parent(required=True)
    sp_optional = _target_parent(required=False)
    client = _client_parent()

    p = sub.add_parser("tkma-init", help="create public parameters and the master secret")
    p.add_argument("--profile", default="test", help="toy | test | production | bit length")
    p.add_argument("--authority", type=Path, required=True, help="TKMA state file to create (0600)")
    p.add_argument("--params-out", type=Path, required=True, help="public parameters file to write")
    p.add_argument("--force", action="store_true", help="replace an existing authority")
    p.set_defaults(handler=cmd_tkma_init)

    p = sub.add_parser("tkma-keygen", parents=[sp_optional], help="enrol or re-key a user")
    p.add_argument("--authority", type=Path, required=True)
    p.add_argument("--user", required=True)
    p.add_argument("--client-out", type=Path, required=True)
    p.add_argument("--server-out", type=Path, required=True)
    p.set_defaults(handler=cmd_tkma_keygen)

    p = sub.add_parser("sp-params", parents=[sp_required], help="install public parameters")
    p.add_argument("--params", type=Path, required=True)
    p.set_defaults(handler=cmd_sp_params)

    p = sub.add_parser("sp-install-key", parents=[sp_required], help="install a server key set")
    p.add_argument("--server-keys", type=Path, required=True)
    p.set_defaults(handler=cmd_sp_install_key)

    p = sub.add_parser("admin-deploy", parents=[sp_required, client], help="deploy a policy file")
    p.add_argument("--policy", type=Path, required=True, help="JSON policy document(s)")
    p.set_defaults(handler=cmd_admin_deploy)

    p = sub.add_parser("admin-remove", parents=[sp_required], help="remove a deployed policy")
    p.add_argument("--kind", required=True, choices=["role_assignment", "permission_assignment", "hierarchy"])
    p.add_argument("--id", default=None, help="requester id or policy id")
    p.set_defaults(handler=cmd_admin_remove)

    p = sub.add_parser("requester-activate", parents=[sp_required, client], help="activate a role")
    p.add_argument("--role", required=True)
    _attribute_options(p)
    p.set_defaults(handler=cmd_requester_activate)

    p = sub.add_parser("requester-deactivate", parents=[sp_required, client], help="deactivate a role")
    p.add_argument("--role", required=True)
    p.set_defaults(handler=cmd_requester_deactivate)

    p = sub.add_parser("requester-access", parents=[sp_required, client], help="request access")
    p.add_argument("--role", required=True)
    p.add_argument("--action", required=True)
    p.add_argument("--target", dest="resource", required=True, help="protected resource")
    _attribute_options(p)
    p.set_defaults(handler=cmd_requester_access)

    p = sub.add_parser("pip-send", parents=[sp_optional, client], help="send contextual attributes")
    p.add_argument("--correlation-id", required=True)
    p.add_argument("--assert", dest="assertions", action="append", required=True, metavar="NAME=VALUE[/WIDTH]")
    p.add_argument("--out", type=Path, default=None, help="write the batch instead of sending it")
    p.set_defaults(handler=cmd_pip_send)

    p = sub.add_parser("sp-revoke", parents=[sp_required], help="revoke a user")
    p.add_argument("--user", required=True)
    p.set_defaults(handler=cmd_sp_revoke)

    p = sub.add_parser("sp-snapshot", parents=[sp_required], help="persist the store")
    p.set_defaults(handler=cmd_sp_snapshot)

    p = sub.add_parser("sp-restore", parents=[sp_required], help="reload the store")
    p.add_argument("--from", dest="source", type=Path, default=None, help="snapshot file to load")
    p.set_defaults(handler=cmd_sp_restore)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None, target_factory: Optional[TargetFactory] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    configure_logging(logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    if getattr(args, "admin_key", None) is None and hasattr(args, "admin_key"):
        args.admin_key = get_settings().SP_ADMIN_API_KEY or None

    try:
        return args.handler(args, target_factory or _default_target)
    except KeyNotFoundError as exc:
        print(f"denied: key-not-found (user {exc.user_id!r} is revoked or not enrolled)", file=sys.stderr)
        return EXIT_KEY_NOT_FOUND
    except ServiceResponseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except _INVALID_INPUT as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (httpx.HTTPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except EncryptedRBACError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
