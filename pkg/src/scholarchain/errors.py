"""Exception hierarchy shared across the simulator.

Every rejected operation raises a subclass of :class:`ProtocolError` and
leaves all state untouched; the chain layer turns these into recorded
transaction rejections rather than aborting block production.
"""


class ProtocolError(Exception):
    """Base class for any rule violation in ledger, lifecycle, market or chain."""


class LedgerError(ProtocolError):
    """Token accounting violation (insufficient balance, escrow or reserve)."""


class LifecycleError(ProtocolError):
    """Illegal article operation (wrong state, authorization, quorum)."""


class CommentRedirectsToMarket(LifecycleError):
    """Plain comments are not accepted while an article is under review.

    Commenting in that state is trading on the review-outcome market; the
    exception carries the market id the caller should trade on instead.
    """

    def __init__(self, market_id: str):
        super().__init__(f"article is under review; comment via market {market_id}")
        self.market_id = market_id


class MarketError(ProtocolError):
    """Prediction-market violation (resolved market, bad size, insolvency)."""


class ChainError(ProtocolError):
    """Malformed transaction or block submitted to the chain layer."""
