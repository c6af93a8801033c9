"""Article lifecycle: the research paper as a four-state machine.

An article moves through ACTIVE, UNDER_REVIEW, PUBLISHED and RETRACTED.
The legal transitions are exactly

    A->A (comments)            U->U (review-market trades)
    A->U (author deposit)      U->A (revise: deposit forfeited)
    P->P (comments, disputes)  U->P (publish: deposit back + reward)
    P->R (upheld retraction)   R->R (comments; R is terminal)

`ProtocolState` aggregates the article registry, the token ledger and the
attached review markets, and exposes every protocol operation.  Operations
validate completely before mutating anything, so a rejected call leaves the
whole state unchanged.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from . import market as market_mod
from .errors import CommentRedirectsToMarket, LifecycleError
from .ledger import FORFEIT, MINT, REFUND, RESERVE, TokenLedger
from .market import Market, Trade

PUBLISH = market_mod.PUBLISH
REVISE = market_mod.REVISE
RETRACT = "retract"
UPHOLD = "uphold"

_FIELD_SEP = "\x1f"


class ArticleState(str, Enum):
    ACTIVE = "ACTIVE"
    UNDER_REVIEW = "UNDER_REVIEW"
    PUBLISHED = "PUBLISHED"
    RETRACTED = "RETRACTED"


@dataclass(frozen=True)
class ContentMetadata:
    """The hashed subset of an article's content data."""

    title: str
    abstract: str
    authors: tuple[tuple[str, str], ...]  # (display name, user id)
    institutions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "authors", tuple(tuple(a) for a in self.authors))
        object.__setattr__(self, "institutions", tuple(self.institutions))
        if not self.title:
            raise LifecycleError("article title must be nonempty")
        if not self.authors:
            raise LifecycleError("article needs at least one author")


def content_hash(meta: ContentMetadata) -> str:
    """SHA-256 of the canonical metadata serialization.

    Fields are joined with 0x1F in the order title, abstract, author names
    (sorted), institutions (sorted), so listing order never changes the
    digest.
    """
    parts = [meta.title, meta.abstract]
    parts.extend(sorted(name for name, _ in meta.authors))
    parts.extend(sorted(meta.institutions))
    return hashlib.sha256(_FIELD_SEP.join(parts).encode("utf-8")).hexdigest()


@dataclass
class Article:
    """One paper-as-contract registry entry."""

    article_hash: str
    state: ArticleState
    owners: list[str]
    doi: Optional[str] = None
    author_deposit: int = 0
    depositor: Optional[str] = None
    review_panel: tuple[str, ...] = ()
    market_id: Optional[str] = None
    comments: list[tuple[str, int, str]] = field(default_factory=list)
    review_round: int = 0
    dispute_seq: int = 0

    def to_canonical(self) -> dict:
        return {
            "article_hash": self.article_hash,
            "state": self.state.value,
            "owners": list(self.owners),
            "doi": self.doi,
            "author_deposit": self.author_deposit,
            "depositor": self.depositor,
            "review_panel": list(self.review_panel),
            "market_id": self.market_id,
            "comments": [list(c) for c in self.comments],
            "review_round": self.review_round,
            "dispute_seq": self.dispute_seq,
        }


@dataclass
class Dispute:
    """A staked retraction challenge against a published article."""

    dispute_id: str
    article_hash: str
    challenger: str
    stake: int
    resolution: Optional[str] = None  # "retract" | "uphold" once decided

    def to_canonical(self) -> dict:
        return {
            "dispute_id": self.dispute_id,
            "article_hash": self.article_hash,
            "challenger": self.challenger,
            "stake": self.stake,
            "resolution": self.resolution,
        }


@dataclass(frozen=True)
class ProtocolConfig:
    """Tunable platform constants.

    A review deposit must strictly exceed `min_review_deposit`; publication
    mints `reward_multiple` times the deposit; a successful challenger's
    bounty equals the stake.  `peers` are the trusted members whose
    majorities decide disputes (the same set approves blocks).
    """

    min_review_deposit: int = 5
    reward_multiple: int = 2
    min_panel: int = 3
    market_liquidity: float = 100.0
    authors_may_trade: bool = False
    initial_reserve: int = 0
    peers: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "peers", tuple(self.peers))
        if self.min_review_deposit < 0 or self.initial_reserve < 0:
            raise LifecycleError("config amounts cannot be negative")
        if self.reward_multiple < 1 or self.min_panel < 1:
            raise LifecycleError("reward multiple and panel minimum must be >= 1")
        if len(set(self.peers)) != len(self.peers):
            raise LifecycleError("peer list has duplicates")

    def to_canonical(self) -> dict:
        return {
            "min_review_deposit": self.min_review_deposit,
            "reward_multiple": self.reward_multiple,
            "min_panel": self.min_panel,
            "market_liquidity": self.market_liquidity,
            "authors_may_trade": self.authors_may_trade,
            "initial_reserve": self.initial_reserve,
            "peers": list(self.peers),
        }


def _majority(votes: Mapping[str, str], choice: str, electorate_size: int) -> bool:
    # Strict majority of the FULL electorate; abstentions count against.
    return sum(1 for v in votes.values() if v == choice) > electorate_size // 2


class ProtocolState:
    """Ledger, article registry and review markets under one logical writer."""

    def __init__(self, config: Optional[ProtocolConfig] = None):
        self.config = config or ProtocolConfig()
        self.ledger = TokenLedger(initial_reserve=self.config.initial_reserve)
        self.articles: dict[str, Article] = {}
        self.disputes: dict[str, Dispute] = {}
        self.markets: dict[str, Market] = {}
        self.clock = 0  # logical time; ticks once per applied operation

    # -- helpers --------------------------------------------------------------

    def article(self, article_hash: str) -> Article:
        art = self.articles.get(article_hash)
        if art is None:
            raise LifecycleError(f"no article with hash {article_hash!r}")
        return art

    def market_of(self, article: Article) -> Market:
        if article.market_id is None or article.market_id not in self.markets:
            raise LifecycleError(f"article {article.article_hash!r} has no market")
        return self.markets[article.market_id]

    def _tick(self) -> int:
        self.clock += 1
        return self.clock

    # -- operations -----------------------------------------------------------

    def submit_article(self, meta: ContentMetadata, submitter: str) -> Article:
        """Announce intent to publish; the content hash secures authorship."""
        digest = content_hash(meta)
        if digest in self.articles:
            raise LifecycleError(f"article {digest!r} already registered")
        article = Article(
            article_hash=digest, state=ArticleState.ACTIVE, owners=[submitter]
        )
        self.articles[digest] = article
        self._tick()
        return article

    def comment(self, article_hash: str, user_id: str, text_hash: str) -> Article:
        """Append a comment; free in every state except under review."""
        article = self.article(article_hash)
        if article.state is ArticleState.UNDER_REVIEW:
            # Commenting during review means trading on the outcome market.
            raise CommentRedirectsToMarket(article.market_id or "")
        article.comments.append((user_id, self._tick(), text_hash))
        return article

    def start_review(
        self,
        article_hash: str,
        author: str,
        deposit: int,
        panel: Sequence[str],
    ) -> Article:
        """Author deposit opens the review and its prediction market."""
        article = self.article(article_hash)
        if article.state is not ArticleState.ACTIVE:
            raise LifecycleError(
                f"review starts from ACTIVE, article is {article.state.value}"
            )
        if author not in article.owners:
            raise LifecycleError(f"{author!r} does not own {article_hash!r}")
        if not isinstance(deposit, int) or deposit <= self.config.min_review_deposit:
            raise LifecycleError(
                f"deposit must exceed {self.config.min_review_deposit} tokens"
            )
        panel = tuple(panel)
        if len(set(panel)) != len(panel):
            raise LifecycleError("review panel has duplicate members")
        if len(panel) < self.config.min_panel:
            raise LifecycleError(
                f"panel of {len(panel)} is below the minimum {self.config.min_panel}"
            )
        if self.ledger.balance(author) < deposit:
            raise LifecycleError(
                f"{author!r} cannot cover the review deposit of {deposit}"
            )
        self.ledger.escrow(author, deposit)
        article.review_round += 1
        market_id = f"{article.article_hash[:16]}:r{article.review_round}"
        self.markets[market_id] = market_mod.open_market(
            self.config.market_liquidity, market_id
        )
        article.state = ArticleState.UNDER_REVIEW
        article.author_deposit = deposit
        article.depositor = author
        article.review_panel = panel
        article.market_id = market_id
        self._tick()
        return article

    def trade_review_shares(
        self, article_hash: str, user_id: str, outcome: str, share_delta: float
    ) -> Trade:
        """Comment-by-trading while the article is under review."""
        article = self.article(article_hash)
        if article.state is not ArticleState.UNDER_REVIEW:
            raise LifecycleError("review-outcome trading needs an open review")
        if not self.config.authors_may_trade and user_id in article.owners:
            raise LifecycleError("authors are barred from their own review market")
        executed = market_mod.trade(
            self.market_of(article), self.ledger, user_id, outcome, share_delta
        )
        self._tick()
        return executed

    def conclude_review(
        self, article_hash: str, reviewer_votes: Mapping[str, str]
    ) -> Article:
        """Apply the panel's decision: strict majority of the full panel.

        Publication refunds the deposit and mints the reward (split evenly
        over the owners, remainder to the first); a revise decision forfeits
        the deposit to the platform reserve.  Either way the outcome market
        resolves and winning shares pay out of the reserve.
        """
        article = self.article(article_hash)
        if article.state is not ArticleState.UNDER_REVIEW:
            raise LifecycleError("no review in progress")
        panel = article.review_panel
        outsiders = [v for v in reviewer_votes if v not in panel]
        if outsiders:
            raise LifecycleError(f"votes from outside the panel: {outsiders}")
        bad_values = [d for d in reviewer_votes.values() if d not in (PUBLISH, REVISE)]
        if bad_values:
            raise LifecycleError(f"unknown review decisions: {bad_values}")
        if _majority(reviewer_votes, PUBLISH, len(panel)):
            decision = PUBLISH
        elif _majority(reviewer_votes, REVISE, len(panel)):
            decision = REVISE
        else:
            raise LifecycleError("no quorum: neither decision has a panel majority")

        mkt = self.market_of(article)
        payout_total = sum(
            math.floor(shares)
            for (_, outcome), shares in mkt.holdings.items()
            if outcome == decision
        )
        deposit = article.author_deposit
        reserve_after_deposit = self.ledger.platform_reserve + (
            deposit if decision == REVISE else 0
        )
        if reserve_after_deposit < payout_total:
            raise LifecycleError(
                f"reserve {reserve_after_deposit} cannot cover market payouts "
                f"of {payout_total}"
            )

        depositor = article.depositor or article.owners[0]
        if decision == PUBLISH:
            self.ledger.resolve_escrow(depositor, deposit, REFUND)
            reward = self.config.reward_multiple * deposit
            share, remainder = divmod(reward, len(article.owners))
            for i, owner in enumerate(article.owners):
                amount = share + (remainder if i == 0 else 0)
                if amount > 0:
                    self.ledger.credit(owner, amount, MINT)
            article.state = ArticleState.PUBLISHED
        else:
            self.ledger.resolve_escrow(depositor, deposit, FORFEIT)
            article.state = ArticleState.ACTIVE
        market_mod.resolve(mkt, self.ledger, decision)
        article.author_deposit = 0
        article.depositor = None
        article.review_panel = ()
        self._tick()
        return article

    def raise_objection(
        self, article_hash: str, challenger: str, stake: int
    ) -> Dispute:
        """Stake tokens to challenge a published article."""
        article = self.article(article_hash)
        if article.state is not ArticleState.PUBLISHED:
            raise LifecycleError("objections target published articles only")
        if not isinstance(stake, int) or stake <= 0:
            raise LifecycleError("objection stake must be a positive token amount")
        if self.ledger.balance(challenger) < stake:
            raise LifecycleError(f"{challenger!r} cannot cover the stake of {stake}")
        if any(
            d.article_hash == article_hash and d.resolution is None
            for d in self.disputes.values()
        ):
            raise LifecycleError("article already has an open dispute")
        self.ledger.escrow(challenger, stake)
        article.dispute_seq += 1
        dispute = Dispute(
            dispute_id=f"{article.article_hash[:16]}:d{article.dispute_seq}",
            article_hash=article_hash,
            challenger=challenger,
            stake=stake,
        )
        self.disputes[dispute.dispute_id] = dispute
        self._tick()
        return dispute

    def resolve_dispute(
        self, dispute_id: str, peer_votes: Mapping[str, str]
    ) -> Article:
        """Peers decide by strict majority of the full peer set.

        Retraction refunds the challenger's stake and pays an equal bounty
        from the reserve; upholding forfeits the stake to the reserve.
        """
        dispute = self.disputes.get(dispute_id)
        if dispute is None:
            raise LifecycleError(f"no dispute {dispute_id!r}")
        if dispute.resolution is not None:
            raise LifecycleError(f"dispute {dispute_id!r} already resolved")
        peers = self.config.peers
        if not peers:
            raise LifecycleError("no peers configured to decide disputes")
        outsiders = [v for v in peer_votes if v not in peers]
        if outsiders:
            raise LifecycleError(f"votes from non-peers: {outsiders}")
        bad_values = [v for v in peer_votes.values() if v not in (RETRACT, UPHOLD)]
        if bad_values:
            raise LifecycleError(f"unknown dispute votes: {bad_values}")
        article = self.article(dispute.article_hash)
        if _majority(peer_votes, RETRACT, len(peers)):
            bounty = dispute.stake
            if self.ledger.platform_reserve < bounty:
                raise LifecycleError(
                    f"reserve {self.ledger.platform_reserve} cannot pay the "
                    f"bounty of {bounty}"
                )
            self.ledger.resolve_escrow(dispute.challenger, dispute.stake, REFUND)
            self.ledger.credit(dispute.challenger, bounty, RESERVE)
            article.state = ArticleState.RETRACTED
            dispute.resolution = RETRACT
        elif _majority(peer_votes, UPHOLD, len(peers)):
            self.ledger.resolve_escrow(dispute.challenger, dispute.stake, FORFEIT)
            dispute.resolution = UPHOLD
        else:
            raise LifecycleError("no quorum: neither outcome has a peer majority")
        self._tick()
        return article

    def claim_published_article(
        self, article_hash: str, doi: str, caller: str
    ) -> Article:
        """Claim (co-)ownership of work already published elsewhere."""
        if not article_hash:
            raise LifecycleError("article hash must be nonempty")
        existing = self.articles.get(article_hash)
        if existing is None:
            article = Article(
                article_hash=article_hash,
                state=ArticleState.PUBLISHED,
                owners=[caller],
                doi=doi,
            )
            self.articles[article_hash] = article
            self._tick()
            return article
        if caller in existing.owners:
            raise LifecycleError("Owner has already claimed that article")
        existing.owners.append(caller)
        self._tick()
        return existing

    # -- snapshots --------------------------------------------------------------

    def clone(self) -> "ProtocolState":
        return copy.deepcopy(self)

    def to_canonical(self) -> dict:
        return {
            "config": self.config.to_canonical(),
            "ledger": self.ledger.to_canonical(),
            "articles": [
                self.articles[h].to_canonical() for h in sorted(self.articles)
            ],
            "disputes": [
                self.disputes[d].to_canonical() for d in sorted(self.disputes)
            ],
            "markets": [
                self.markets[m].to_canonical() for m in sorted(self.markets)
            ],
            "clock": self.clock,
        }

    def registry_export_json(self) -> str:
        """Article registry as a JSON array sorted by article hash."""
        entries = [self.articles[h].to_canonical() for h in sorted(self.articles)]
        return json.dumps(entries, indent=2, sort_keys=True) + "\n"
