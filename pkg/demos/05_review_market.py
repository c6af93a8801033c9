"""Mechanics of the review-outcome market.

The automated market maker prices PUBLISH and REVISE shares from a
logarithmic scoring rule: quotes are probabilities, buying moves the
price against you, and the maker's worst-case subsidy is b*ln(2) tokens.
"""

import math

from scholarchain import TokenLedger, open_market, price, resolve, trade
from scholarchain.market import trade_cost

b = 100.0
ledger = TokenLedger(initial_reserve=200, balances={"opt": 100, "skeptic": 100})
market = open_market(b, "demo")

print(f"Fresh market, liquidity b={b:.0f}:")
print(f"  P(PUBLISH) = {price(market, 'PUBLISH'):.5f}   "
      f"P(REVISE) = {price(market, 'REVISE'):.5f}")

raw = trade_cost(market, "PUBLISH", 10)
print(f"\nBuying 10 PUBLISH shares costs {raw:.4f} raw,")
executed = trade(market, ledger, "opt", "PUBLISH", 10)
print(f"rounded up to {executed.token_cost} integer tokens (house never loses).")
print(f"  P(PUBLISH) moved to {price(market, 'PUBLISH'):.5f}")

trade(market, ledger, "skeptic", "REVISE", 8)
print(f"\nA skeptic buys 8 REVISE shares:")
print(f"  P(PUBLISH) = {price(market, 'PUBLISH'):.5f}   "
      f"P(REVISE) = {price(market, 'REVISE'):.5f}")
print(f"  quotes always sum to "
      f"{price(market, 'PUBLISH') + price(market, 'REVISE'):.12f}")

# Immediately unwinding a position can only lose tokens to rounding.
before = ledger.balance("opt")
trade(market, ledger, "opt", "PUBLISH", 5)
trade(market, ledger, "opt", "PUBLISH", -5)
print(f"\nBuy-then-sell round trip costs the trader "
      f"{before - ledger.balance('opt')} token(s) in rounding spread.")

# Review concludes as PUBLISH: each winning share pays one token.
payouts = resolve(market, ledger, "PUBLISH")
print(f"\nResolved PUBLISH; payouts: {payouts}")
print(f"  opt     : 100 -> {ledger.balance('opt')}")
print(f"  skeptic : 100 -> {ledger.balance('skeptic')}")
print(f"  reserve : 200 -> {ledger.platform_reserve}")
print(f"\nWorst-case maker subsidy is b*ln(2) = {b * math.log(2):.2f} tokens;")
print(f"this session's net reserve change was {ledger.platform_reserve - 200}.")
