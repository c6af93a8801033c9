"""Token accounts, escrow and the platform reserve.

Tokens are integers, and users exchange them only with the platform: the
supported flows are minting, grants from the reserve, escrow of a user's
own balance, and escrow resolution back to the user or into the reserve.
There is deliberately no peer-to-peer transfer.

The conservation identity

    sum(balances) + sum(escrowed) + reserve == initial supply + minted - burned

holds after every operation; operations validate first and mutate after,
so a rejected call leaves the ledger untouched.  Reputation is the number
of tokens a user holds, escrowed ones included.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional

from .errors import LedgerError

MINT = "mint"
RESERVE = "reserve"
FORFEIT = "forfeit"
REFUND = "refund"


@dataclass
class Account:
    user_id: str
    balance: int = 0
    escrowed: int = 0


class Reputation(NamedTuple):
    """Token-derived standing; `known` is False for users without an account."""

    score: int
    known: bool


def _positive_amount(amount) -> int:
    if isinstance(amount, bool) or not isinstance(amount, int) or amount <= 0:
        raise LedgerError(f"amount must be a positive integer, got {amount!r}")
    return amount


class TokenLedger:
    """Single-writer token ledger; reads on snapshots may be concurrent."""

    def __init__(
        self,
        initial_reserve: int = 0,
        balances: Optional[Mapping[str, int]] = None,
    ):
        if initial_reserve < 0:
            raise LedgerError("initial reserve cannot be negative")
        self.accounts: dict[str, Account] = {}
        self.platform_reserve = initial_reserve
        self.minted_total = 0
        self.burned_total = 0
        for user_id, amount in (balances or {}).items():
            if amount < 0:
                raise LedgerError(f"negative opening balance for {user_id!r}")
            self.accounts[user_id] = Account(user_id, balance=amount)
        self.initial_supply = initial_reserve + sum(
            a.balance for a in self.accounts.values()
        )

    # -- queries ------------------------------------------------------------

    def balance(self, user_id: str) -> int:
        acct = self.accounts.get(user_id)
        return acct.balance if acct else 0

    def escrowed(self, user_id: str) -> int:
        acct = self.accounts.get(user_id)
        return acct.escrowed if acct else 0

    def reputation(self, user_id: str) -> Reputation:
        acct = self.accounts.get(user_id)
        if acct is None:
            return Reputation(0, False)
        return Reputation(acct.balance + acct.escrowed, True)

    def conservation_gap(self) -> int:
        """Zero when the conservation identity holds."""
        held = sum(a.balance + a.escrowed for a in self.accounts.values())
        return (
            held
            + self.platform_reserve
            - self.initial_supply
            - self.minted_total
            + self.burned_total
        )

    # -- mutations (validate first, then apply) ------------------------------

    def credit(self, user_id: str, amount: int, source: str = MINT) -> None:
        """Grant tokens to a user, newly minted or out of the reserve."""
        amount = _positive_amount(amount)
        if source not in (MINT, RESERVE):
            raise LedgerError(f"unknown credit source {source!r}")
        if source == RESERVE and self.platform_reserve < amount:
            raise LedgerError(
                f"reserve {self.platform_reserve} cannot cover credit of {amount}"
            )
        acct = self.accounts.setdefault(user_id, Account(user_id))
        if source == MINT:
            self.minted_total += amount
        else:
            self.platform_reserve -= amount
        acct.balance += amount

    def escrow(self, user_id: str, amount: int) -> None:
        """Lock part of a user's balance pending an outcome."""
        amount = _positive_amount(amount)
        acct = self.accounts.get(user_id)
        if acct is None or acct.balance < amount:
            have = acct.balance if acct else 0
            raise LedgerError(f"{user_id!r} has {have}, cannot escrow {amount}")
        acct.balance -= amount
        acct.escrowed += amount

    def resolve_escrow(self, user_id: str, amount: int, outcome: str) -> None:
        """Release escrowed tokens back to the user or forfeit them."""
        amount = _positive_amount(amount)
        if outcome not in (FORFEIT, REFUND):
            raise LedgerError(f"unknown escrow outcome {outcome!r}")
        acct = self.accounts.get(user_id)
        if acct is None or acct.escrowed < amount:
            have = acct.escrowed if acct else 0
            raise LedgerError(
                f"{user_id!r} has {have} in escrow, cannot resolve {amount}"
            )
        acct.escrowed -= amount
        if outcome == FORFEIT:
            self.platform_reserve += amount
        else:
            acct.balance += amount

    # -- snapshots ------------------------------------------------------------

    def clone(self) -> "TokenLedger":
        return copy.deepcopy(self)

    def to_canonical(self) -> dict:
        """Deterministic dict form; account keys sorted for stable hashing."""
        return {
            "accounts": {
                uid: {"balance": a.balance, "escrowed": a.escrowed}
                for uid, a in sorted(self.accounts.items())
            },
            "platform_reserve": self.platform_reserve,
            "minted_total": self.minted_total,
            "burned_total": self.burned_total,
            "initial_supply": self.initial_supply,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_canonical(), indent=2, sort_keys=True) + "\n"
