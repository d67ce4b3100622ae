"""
app/bench/flat_baseline.py

The flat ⟨S, A, T⟩ + CONDITION policy model, encrypted with the same scheme,
used as the comparison point for the RBAC engine.

Workload (50 subjects × 10 action/target pairs): every tuple carries
    RequesterName = <subject> AND Location = cardiology-ward
    AND 9 <= Time <= 17 (5-bit hour)
so the whole condition is checked at grant time. The RBAC side moves
location + time to activation and keeps only RequesterName on the permission.
Requests target the last tuple of the last subject (worst case).
"""

from __future__ import annotations

import logging
import random
from typing import Optional, Sequence

from app.models.enums import ComparisonOp, DenyReason, Gate
from app.schemas.bundles import FlatPolicy
from app.schemas.crypto import ClientKeySet, PublicParams, ServerTrapdoor
from app.schemas.policy import AttributeAssertion, CompareNode, ConditionTree, EqualsNode, GateNode
from app.schemas.requests import Decision
from app.services.client_toolkit import encrypt_condition
from app.services.crypto.scheme import client_encrypt, server_reencrypt
from app.services.engine import EvaluationStats, ServiceProvider
from app.services.engine.evaluation import counted_match, evaluate_condition
from app.services.policy_model import tokenize_action, tokenize_subject, tokenize_target

logger = logging.getLogger(__name__)

HOUR_BIT_WIDTH = 5
WARD = "cardiology-ward"


def ward_hours_nodes() -> list:
    return [
        EqualsNode(attribute="Location", equals=WARD),
        CompareNode(attribute="Time", op=ComparisonOp.GE, threshold=9, bit_width=HOUR_BIT_WIDTH),
        CompareNode(attribute="Time", op=ComparisonOp.LE, threshold=17, bit_width=HOUR_BIT_WIDTH),
    ]


def ward_hours_condition() -> ConditionTree:
    return ConditionTree(root=GateNode(gate=Gate.AND, children=ward_hours_nodes()))


def name_condition(name: str) -> ConditionTree:
    return ConditionTree(root=EqualsNode(attribute="RequesterName", equals=name))


def flat_condition(name: str) -> ConditionTree:
    return ConditionTree(
        root=GateNode(
            gate=Gate.AND,
            children=[EqualsNode(attribute="RequesterName", equals=name), *ward_hours_nodes()],
        )
    )


def on_duty_assertions(name: str, hour: int = 10) -> list[AttributeAssertion]:
    return [
        AttributeAssertion(name="RequesterName", value=name),
        AttributeAssertion(name="Location", value=WARD),
        AttributeAssertion(name="Time", value=hour, bit_width=HOUR_BIT_WIDTH),
    ]


class FlatPolicyStore:
    """Linear scan over every tuple: subject, then action + target, then condition."""

    def __init__(self, sp: ServiceProvider) -> None:
        self.sp = sp
        self.entries: list[FlatPolicy] = []

    @property
    def params(self) -> PublicParams:
        return self.sp.params

    def deploy(
        self,
        subject: str,
        action: str,
        target: str,
        condition: Optional[ConditionTree],
        keyset: ClientKeySet,
        rng: random.Random | None = None,
    ) -> FlatPolicy:
        params = self.params
        skey = self.sp.key_store.get(keyset.user_id)

        def seal(token: str):
            return server_reencrypt(client_encrypt(token, keyset, params, rng), skey, params)

        client_tree = encrypt_condition(condition, keyset, params, rng) if condition else None
        entry = FlatPolicy(
            subject=seal(tokenize_subject(subject)),
            action=seal(tokenize_action(action)),
            target=seal(tokenize_target(target)),
            condition=self.sp.reencrypt_tree(client_tree, skey),
        )
        self.entries.append(entry)
        return entry

    def authorize(
        self,
        subject: ServerTrapdoor,
        action: ServerTrapdoor,
        target: ServerTrapdoor,
        attributes: Sequence[ServerTrapdoor],
        stats: Optional[EvaluationStats] = None,
    ) -> Decision:
        params = self.params
        condition_failed = False
        for entry in self.entries:
            if not counted_match(entry.subject, subject, params, stats):
                continue
            if not (
                counted_match(entry.action, action, params, stats)
                and counted_match(entry.target, target, params, stats)
            ):
                continue
            if entry.condition is None or evaluate_condition(attributes, entry.condition, params, stats):
                return Decision.permit()
            condition_failed = True
        return Decision.deny(DenyReason.CONDITION_FALSE if condition_failed else DenyReason.NO_PERMISSION)
