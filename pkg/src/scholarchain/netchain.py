"""Lite permissioned chain: quorum re-execution over the protocol state.

There is no timing model and no fork handling: one call to
`produce_block` turns the pending pool into one candidate block.  Every
peer independently re-executes the pending transactions against the tip
state and approves when its post-state digest matches the proposer's; the
block commits only with a two-thirds-plus-one quorum of matching digests.
Transactions that fail protocol rules are kept in the block flagged as
rejected and change nothing, preserving an auditable history.

Blocks are hash-linked over their full content (header *and* transaction
records), so any single-byte mutation of a committed block is caught by
`verify_chain` replaying from genesis.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import ChainError, ProtocolError
from .lifecycle import ContentMetadata, ProtocolState

GENESIS_PREV_HASH = "0" * 64

APPLIED = "applied"
REJECTED = "rejected"


class TxKind(str, Enum):
    """Every state-changing ledger, lifecycle and market operation."""

    CREDIT = "CREDIT"
    ESCROW = "ESCROW"
    RESOLVE_ESCROW = "RESOLVE_ESCROW"
    SUBMIT_ARTICLE = "SUBMIT_ARTICLE"
    COMMENT = "COMMENT"
    START_REVIEW = "START_REVIEW"
    TRADE = "TRADE"
    CONCLUDE_REVIEW = "CONCLUDE_REVIEW"
    RAISE_OBJECTION = "RAISE_OBJECTION"
    RESOLVE_DISPUTE = "RESOLVE_DISPUTE"
    CLAIM_ARTICLE = "CLAIM_ARTICLE"


#: Transactions a user issues about themself; the chain checks that the
#: named actor is the submitter.  The rest are trusted-platform operations.
_USER_INITIATED = {
    TxKind.ESCROW,
    TxKind.SUBMIT_ARTICLE,
    TxKind.COMMENT,
    TxKind.START_REVIEW,
    TxKind.TRADE,
    TxKind.RAISE_OBJECTION,
    TxKind.CLAIM_ARTICLE,
}


@dataclass(frozen=True)
class Transaction:
    tx_id: int
    kind: TxKind
    payload: dict
    submitter: str
    signature: str = ""  # placeholder; authorization is by submitter identity

    def to_canonical(self) -> dict:
        return {
            "tx_id": self.tx_id,
            "kind": self.kind.value,
            "payload": self.payload,
            "submitter": self.submitter,
            "signature": self.signature,
        }


@dataclass(frozen=True)
class TxRecord:
    """A transaction as committed: applied, or rejected with the reason."""

    tx: Transaction
    status: str
    error: str = ""

    def to_canonical(self) -> dict:
        record = self.tx.to_canonical()
        record["status"] = self.status
        record["error"] = self.error
        return record


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: str
    txs: tuple[TxRecord, ...]
    state_hash: str
    approvals: tuple[str, ...]
    block_hash: str

    def to_canonical(self) -> dict:
        # Field order is the wire format; block_hash seals all of it.
        return {
            "height": self.height,
            "prevHash": self.prev_hash,
            "txs": [t.to_canonical() for t in self.txs],
            "stateHash": self.state_hash,
            "approvals": list(self.approvals),
            "blockHash": self.block_hash,
        }


@dataclass(frozen=True)
class PeerSet:
    """Trusted peers; quorum is the BFT-style floor(2n/3) + 1."""

    peers: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "peers", tuple(self.peers))
        if not self.peers:
            raise ChainError("peer set cannot be empty")
        if len(set(self.peers)) != len(self.peers):
            raise ChainError("duplicate peer ids")

    @property
    def quorum(self) -> int:
        return (2 * len(self.peers)) // 3 + 1


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def state_hash(state: ProtocolState) -> str:
    """SHA-256 of the canonical (ledger, articles, markets) serialization."""
    return hashlib.sha256(
        _canonical_json(state.to_canonical()).encode("utf-8")
    ).hexdigest()


def _block_content_hash(
    height: int,
    prev_hash: str,
    txs: Sequence[TxRecord],
    digest: str,
    approvals: Sequence[str],
) -> str:
    content = {
        "height": height,
        "prevHash": prev_hash,
        "txs": [t.to_canonical() for t in txs],
        "stateHash": digest,
        "approvals": list(approvals),
    }
    return hashlib.sha256(_canonical_json(content).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Transaction application
# ---------------------------------------------------------------------------

def apply_tx(state: ProtocolState, tx: Transaction) -> None:
    """Execute one transaction against the state; raises on any violation.

    Operations validate before mutating, so a raise leaves `state` intact.
    """
    p = tx.payload
    try:
        if tx.kind in _USER_INITIATED:
            actor = p.get("user", tx.submitter)
            if actor != tx.submitter:
                raise ChainError(
                    f"{tx.submitter!r} cannot act for {actor!r} in {tx.kind.value}"
                )
        if tx.kind is TxKind.CREDIT:
            state.ledger.credit(p["user"], p["amount"], p.get("source", "mint"))
        elif tx.kind is TxKind.ESCROW:
            state.ledger.escrow(tx.submitter, p["amount"])
        elif tx.kind is TxKind.RESOLVE_ESCROW:
            state.ledger.resolve_escrow(p["user"], p["amount"], p["outcome"])
        elif tx.kind is TxKind.SUBMIT_ARTICLE:
            meta = ContentMetadata(
                title=p["title"],
                abstract=p.get("abstract", ""),
                authors=tuple((a[0], a[1]) for a in p["authors"]),
                institutions=tuple(p.get("institutions", ())),
            )
            state.submit_article(meta, tx.submitter)
        elif tx.kind is TxKind.COMMENT:
            state.comment(p["article"], tx.submitter, p["text_hash"])
        elif tx.kind is TxKind.START_REVIEW:
            state.start_review(
                p["article"], tx.submitter, p["deposit"], tuple(p["panel"])
            )
        elif tx.kind is TxKind.TRADE:
            state.trade_review_shares(
                p["article"], tx.submitter, p["outcome"], float(p["shares"])
            )
        elif tx.kind is TxKind.CONCLUDE_REVIEW:
            state.conclude_review(p["article"], dict(p["votes"]))
        elif tx.kind is TxKind.RAISE_OBJECTION:
            state.raise_objection(p["article"], tx.submitter, p["stake"])
        elif tx.kind is TxKind.RESOLVE_DISPUTE:
            state.resolve_dispute(p["dispute"], dict(p["votes"]))
        elif tx.kind is TxKind.CLAIM_ARTICLE:
            state.claim_published_article(p["article"], p.get("doi", ""), tx.submitter)
        else:  # pragma: no cover - enum is exhaustive
            raise ChainError(f"unhandled kind {tx.kind}")
    except (KeyError, TypeError, IndexError) as exc:
        raise ChainError(f"bad payload for {tx.kind.value}: {exc}") from exc


# ---------------------------------------------------------------------------
# Pool and chain
# ---------------------------------------------------------------------------

class TxPool:
    """FIFO pending pool with strictly increasing transaction ids."""

    def __init__(self):
        self.pending: list[Transaction] = []

    def __len__(self) -> int:
        return len(self.pending)


def submit_tx(pool: TxPool, tx: Transaction, chain: Optional["Chain"] = None) -> TxPool:
    """Validate a transaction's form and append it to the pool."""
    if not isinstance(tx.kind, TxKind):
        raise ChainError(f"unknown transaction kind {tx.kind!r}")
    if not isinstance(tx.payload, dict):
        raise ChainError("payload must be a mapping")
    if not isinstance(tx.submitter, str) or not tx.submitter:
        raise ChainError("submitter must be a nonempty user id")
    if not isinstance(tx.tx_id, int) or tx.tx_id < 0:
        raise ChainError(f"tx id must be a non-negative integer, got {tx.tx_id!r}")
    last = pool.pending[-1].tx_id if pool.pending else -1
    if chain is not None:
        committed = (r.tx.tx_id for b in chain.blocks for r in b.txs)
        last = max(last, max(committed, default=-1))
    if tx.tx_id <= last:
        raise ChainError(f"tx id {tx.tx_id} is not strictly increasing (last {last})")
    pool.pending.append(tx)
    return pool


class Chain:
    """Committed blocks plus the replayable tip state."""

    def __init__(self, genesis: ProtocolState):
        self.genesis = genesis.clone()
        self.tip = genesis.clone()
        self.blocks: list[Block] = []

    @property
    def height(self) -> int:
        return len(self.blocks)


class BlockResult(NamedTuple):
    committed: bool
    block: Optional[Block]
    approvals: tuple[str, ...]


def produce_block(
    chain: Chain,
    pool: TxPool,
    peer_set: PeerSet,
    faulty_peers: Iterable[str] = (),
) -> BlockResult:
    """Execute the pool against the tip and commit on quorum agreement.

    Simulated faulty peers report a corrupted digest and never approve.
    On quorum failure the pool is retained and the chain is unchanged.
    """
    if not pool.pending:
        raise ChainError("pending pool is empty")
    faulty = set(faulty_peers)

    def execute(base: ProtocolState) -> tuple[ProtocolState, list[TxRecord]]:
        working = base.clone()
        records = []
        for tx in pool.pending:
            try:
                apply_tx(working, tx)
                records.append(TxRecord(tx, APPLIED))
            except ProtocolError as exc:
                records.append(TxRecord(tx, REJECTED, str(exc)))
        return working, records

    proposed_state, records = execute(chain.tip)
    proposed_digest = state_hash(proposed_state)

    approvals = []
    for peer in peer_set.peers:
        if peer in faulty:
            continue  # its divergent digest can never match
        peer_state, _ = execute(chain.tip)
        if state_hash(peer_state) == proposed_digest:
            approvals.append(peer)
    approvals = tuple(sorted(approvals))

    if len(approvals) < peer_set.quorum:
        return BlockResult(False, None, approvals)

    prev_hash = chain.blocks[-1].block_hash if chain.blocks else GENESIS_PREV_HASH
    height = chain.height
    block = Block(
        height=height,
        prev_hash=prev_hash,
        txs=tuple(records),
        state_hash=proposed_digest,
        approvals=approvals,
        block_hash=_block_content_hash(
            height, prev_hash, records, proposed_digest, approvals
        ),
    )
    chain.blocks.append(block)
    chain.tip = proposed_state
    pool.pending = []
    return BlockResult(True, block, approvals)


class VerifyResult(NamedTuple):
    ok: bool
    first_bad_height: Optional[int]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_chain(
    blocks: Sequence[Block],
    genesis: ProtocolState,
    peer_set: PeerSet,
) -> VerifyResult:
    """Replay all blocks from genesis and check every link and digest.

    Valid iff heights are consecutive, each prev_hash matches the previous
    block's content digest, every block's own digest seals its content,
    approvals form a quorum of known peers, recorded tx statuses match
    re-execution, and each recorded state hash equals the replayed one.
    """
    state = genesis.clone()
    prev_hash = GENESIS_PREV_HASH
    for expected_height, block in enumerate(blocks):
        def bad(reason: str) -> VerifyResult:
            return VerifyResult(False, block.height, reason)

        if block.height != expected_height:
            return VerifyResult(False, expected_height, "height out of sequence")
        if block.prev_hash != prev_hash:
            return bad("broken prev-hash link")
        recomputed = _block_content_hash(
            block.height, block.prev_hash, block.txs, block.state_hash,
            block.approvals,
        )
        if recomputed != block.block_hash:
            return bad("block content does not match its digest")
        if len(block.approvals) < peer_set.quorum:
            return bad("approvals below quorum")
        if not set(block.approvals) <= set(peer_set.peers):
            return bad("approval from unknown peer")
        for record in block.txs:
            try:
                apply_tx(state, record.tx)
                replay_status = APPLIED
            except ProtocolError:
                replay_status = REJECTED
            if replay_status != record.status:
                return bad(f"tx {record.tx.tx_id} status diverges on replay")
        if state_hash(state) != block.state_hash:
            return bad("replayed state hash mismatch")
        prev_hash = block.block_hash
    return VerifyResult(True, None)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

def export_chain(blocks: Sequence[Block]) -> str:
    """One block per line, fields in fixed order, compact separators."""
    return "".join(
        json.dumps(b.to_canonical(), separators=(",", ":")) + "\n" for b in blocks
    )


_TX_WIRE_KEYS = ["tx_id", "kind", "payload", "submitter", "signature",
                 "status", "error"]
_BLOCK_WIRE_KEYS = ["height", "prevHash", "txs", "stateHash", "approvals",
                    "blockHash"]


def _tx_record_from_obj(obj: dict) -> TxRecord:
    if not isinstance(obj, dict) or list(obj) != _TX_WIRE_KEYS:
        raise ChainError(f"tx record keys must be exactly {_TX_WIRE_KEYS}")
    if obj["status"] not in (APPLIED, REJECTED):
        raise ChainError(f"unknown tx status {obj['status']!r}")
    tx = Transaction(
        tx_id=obj["tx_id"],
        kind=TxKind(obj["kind"]),
        payload=obj["payload"],
        submitter=obj["submitter"],
        signature=obj["signature"],
    )
    return TxRecord(tx, obj["status"], obj["error"])


def import_chain(text: str) -> list[Block]:
    """Parse an exported chain; malformed lines raise ChainError.

    The format is strictly newline-delimited (no other separator byte is a
    block boundary), so corrupted separators surface as parse errors.
    """
    blocks = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "":
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict) or list(obj) != _BLOCK_WIRE_KEYS:
                raise ChainError(f"block keys must be exactly {_BLOCK_WIRE_KEYS}")
            block = Block(
                height=obj["height"],
                prev_hash=obj["prevHash"],
                txs=tuple(_tx_record_from_obj(t) for t in obj["txs"]),
                state_hash=obj["stateHash"],
                approvals=tuple(obj["approvals"]),
                block_hash=obj["blockHash"],
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ChainError(f"line {lineno}: malformed block: {exc}") from exc
        blocks.append(block)
    return blocks


def verify_export(
    text: str, genesis: ProtocolState, peer_set: PeerSet
) -> VerifyResult:
    """Verify a serialized chain; parse failures count as verification failures."""
    try:
        blocks = import_chain(text)
    except ChainError as exc:
        return VerifyResult(False, None, str(exc))
    return verify_chain(blocks, genesis, peer_set)
