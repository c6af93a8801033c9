"""Review-outcome prediction market (logarithmic market scoring rule).

Each article under review gets a binary market over PUBLISH and REVISE.
The automated market maker quotes prices from the cost function

    C(q) = b * ln(exp(q_PUBLISH / b) + exp(q_REVISE / b))

so a trade moving the book from q to q' costs C(q') - C(q) regardless of
how the book got to q, and the maker's worst-case loss at resolution is
bounded by b * ln 2.

The ledger deals in integer tokens, so real-valued costs are rounded in the
house's favor: buys round up, sale proceeds and resolution payouts round
down.  Buy costs move user -> reserve (through escrow-and-forfeit, the only
sanctioned user-to-platform flow); sales and payouts are reserve grants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import LedgerError, MarketError
from .ledger import FORFEIT, RESERVE, TokenLedger

PUBLISH = "PUBLISH"
REVISE = "REVISE"
OUTCOMES = (PUBLISH, REVISE)


def lmsr_cost(quantities: Mapping[str, float], b: float) -> float:
    """Cost-function value at a book position, max-shifted for stability."""
    scaled = [q / b for q in quantities.values()]
    m = max(scaled)
    return b * (m + math.log(sum(math.exp(x - m) for x in scaled)))


def lmsr_price(quantities: Mapping[str, float], b: float, outcome: str) -> float:
    scaled = {o: q / b for o, q in quantities.items()}
    m = max(scaled.values())
    exp = {o: math.exp(x - m) for o, x in scaled.items()}
    return exp[outcome] / sum(exp.values())


@dataclass
class Market:
    """One open-or-resolved review market."""

    market_id: str
    b: float
    outstanding: dict[str, float] = field(
        default_factory=lambda: {PUBLISH: 0.0, REVISE: 0.0}
    )
    holdings: dict[tuple[str, str], float] = field(default_factory=dict)
    resolved: Optional[str] = None
    trade_count: int = 0
    events: list[dict] = field(default_factory=list)

    def holding(self, user_id: str, outcome: str) -> float:
        return self.holdings.get((user_id, outcome), 0.0)

    def to_canonical(self) -> dict:
        # The event log is an audit trail, not consensus state; the trade
        # counter is included because future event numbering depends on it.
        return {
            "market_id": self.market_id,
            "b": self.b,
            "outstanding": {o: self.outstanding[o] for o in OUTCOMES},
            "holdings": {
                f"{uid}:{outcome}": shares
                for (uid, outcome), shares in sorted(self.holdings.items())
            },
            "resolved": self.resolved,
            "trade_count": self.trade_count,
        }


@dataclass(frozen=True)
class Trade:
    """Executed trade: positive share_delta buys, negative sells.

    `token_cost` is signed the same way: positive means the user paid.
    """

    user_id: str
    outcome: str
    share_delta: float
    token_cost: int


def open_market(b: float, market_id: str = "market") -> Market:
    """Fresh market: no outstanding shares, both outcomes priced at 0.5."""
    if not b > 0:
        raise MarketError(f"liquidity must be positive, got {b}")
    return Market(market_id=market_id, b=float(b))


def _require_open(market: Market) -> None:
    if market.resolved is not None:
        raise MarketError(f"market {market.market_id} already resolved")


def _require_outcome(outcome: str) -> None:
    if outcome not in OUTCOMES:
        raise MarketError(f"unknown outcome {outcome!r}")


def price(market: Market, outcome: str) -> float:
    """Current probability quote for an outcome; quotes sum to one."""
    _require_open(market)
    _require_outcome(outcome)
    return lmsr_price(market.outstanding, market.b, outcome)


def trade_cost(market: Market, outcome: str, share_delta: float) -> float:
    """Pre-rounding cost of a prospective trade; pure query."""
    _require_outcome(outcome)
    before = market.outstanding
    after = dict(before)
    after[outcome] += share_delta
    return lmsr_cost(after, market.b) - lmsr_cost(before, market.b)


def trade(
    market: Market,
    ledger: TokenLedger,
    user_id: str,
    outcome: str,
    share_delta: float,
) -> Trade:
    """Buy (positive delta) or sell (negative delta) outcome shares.

    Token cost is ceil(real cost): rounding up what buyers pay and, for the
    negative costs of sales, rounding the payout down.
    """
    _require_open(market)
    _require_outcome(outcome)
    if not math.isfinite(share_delta) or share_delta == 0:
        raise MarketError("share delta must be a nonzero finite number")
    held = market.holding(user_id, outcome)
    if share_delta < 0 and held < -share_delta:
        raise MarketError(
            f"{user_id!r} holds {held} {outcome} shares, cannot sell {-share_delta}"
        )
    token_cost = math.ceil(trade_cost(market, outcome, share_delta))
    if token_cost > 0:
        if ledger.balance(user_id) < token_cost:
            raise LedgerError(
                f"{user_id!r} balance {ledger.balance(user_id)} cannot cover "
                f"trade cost {token_cost}"
            )
        ledger.escrow(user_id, token_cost)
        ledger.resolve_escrow(user_id, token_cost, FORFEIT)
    elif token_cost < 0:
        ledger.credit(user_id, -token_cost, RESERVE)
    market.outstanding[outcome] += share_delta
    new_holding = held + share_delta
    if new_holding == 0.0:
        market.holdings.pop((user_id, outcome), None)
    else:
        market.holdings[(user_id, outcome)] = new_holding
    market.trade_count += 1
    executed = Trade(user_id, outcome, share_delta, token_cost)
    market.events.append(
        {
            "tx": market.trade_count,
            "user": user_id,
            "outcome": outcome,
            "shares": share_delta,
            "cost": token_cost,
        }
    )
    return executed


def resolve(market: Market, ledger: TokenLedger, outcome: str) -> dict[str, int]:
    """Pay one token per winning share (rounded down) and close the market.

    Payouts come from the platform reserve, which must cover them all; the
    maker's subsidy requirement is bounded by b * ln 2.
    """
    _require_open(market)
    _require_outcome(outcome)
    payouts = {
        uid: math.floor(shares)
        for (uid, held_outcome), shares in sorted(market.holdings.items())
        if held_outcome == outcome and math.floor(shares) > 0
    }
    total = sum(payouts.values())
    if total > ledger.platform_reserve:
        raise LedgerError(
            f"reserve {ledger.platform_reserve} cannot cover payouts of {total}"
        )
    for uid, amount in payouts.items():
        ledger.credit(uid, amount, RESERVE)
    market.resolved = outcome
    market.events.append({"tx": market.trade_count + 1, "resolved": outcome,
                          "payouts": payouts})
    return payouts


def event_log_lines(market: Market) -> str:
    """Market audit trail as JSON lines, one event per line."""
    return "".join(json.dumps(e) + "\n" for e in market.events)


def payout_table_csv(payouts: Mapping[str, int]) -> str:
    lines = ["user,tokens"]
    for uid in sorted(payouts):
        lines.append(f"{uid},{payouts[uid]}")
    return "\n".join(lines) + "\n"
