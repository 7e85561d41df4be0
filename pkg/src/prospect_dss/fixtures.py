"""Synthetic prospectus corpus generator.

Stands in for the proprietary annotated corpus: template-based German and
English snippets with known gold spans for all 17 types. The same seed always
yields a byte-identical corpus; the repository ships one generated instance
so golden-file tests do not depend on generator stability.
"""

from __future__ import annotations

import datetime as _dt
import random
from dataclasses import dataclass, field

from .documents import (
    Annotation,
    Document,
    DocumentMetadata,
    TargetType,
    baseline_tokenize,
    sort_annotations,
)
from .oracles import oracle_isin_check_digit

T = TargetType


def default_counts() -> dict[TargetType, int]:
    """Per-type gold mention counts, loosely proportional to the real corpus."""
    return {
        T.COUPON_FIXED: 5,
        T.COUPON_VARIABLE_INDEX: 3,
        T.COUPON_VARIABLE_MARGIN: 3,
        T.COUPON_VARIABLE_OPERATOR: 3,
        T.COUPON_VARIABLE_TENOR: 3,
        T.CURRENCY: 7,
        T.EARLY_REDEMPTION_AMOUNT: 8,
        T.EARLY_REDEMPTION: 6,
        T.ISIN: 8,
        T.PRINCIPAL_AMOUNT: 8,
        T.REDEMPTION_AT_MATURITY_AMOUNT: 4,
        T.REDEMPTION_AT_MATURITY: 8,
        T.SPECIAL_TERMINATION: 8,
        T.SPECIAL_TERMINATION_AMOUNT: 5,
        T.STATUS_NON_PREFERRED: 1,
        T.STATUS_SENIOR_NON_PREFERRED: 7,
        T.TYPE_OF_INSTRUMENT: 8,
    }


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 1
    counts: dict[TargetType, int] = field(default_factory=default_counts)
    de_share: float = 0.7  # locale mix: probability of a German document
    noise: bool = True  # column-break / hyphenation filler artifacts


_ISSUERS = ("Beispielbank AG", "Musterkredit Institut", "Nordlicht Finanz KGaA")

_FILLER = {
    "de": (
        "Die Emittentin veröffentlicht diese Bedingungen gemäß den gesetzlichen Vorgaben.",
        "Die vollständigen Bedingungen liegen bei der Zahlstelle zur Einsicht aus.",
        "Begriffe in Großschreibung haben die ihnen in den Bedingungen zugewiesene Bedeutung.",
    ),
    "en": (
        "The issuer publishes these terms in accordance with statutory requirements.",
        "The complete conditions are available for inspection at the paying agent.",
        "Capitalised terms carry the meaning assigned to them in the conditions.",
    ),
}

_NOISE = ("Seite 2 von 14", "— 7 —", "Fortsetzung nächste Spal-\nte siehe unten")


def _random_isin(rng: random.Random) -> str:
    body = "DE" + "".join(rng.choice("0123456789ABCDEFGHJKLMNPRSTUVWXYZ") for _ in range(9))
    return body + str(oracle_isin_check_digit(body))


def _amount(rng: random.Random, locale: str, high: bool) -> str:
    if high:
        millions = rng.choice((1, 2, 5, 10, 25))
        de = f"{millions}.000.000,00"
        en = f"{millions},000,000.00"
    else:
        thousands = rng.choice((50, 100, 250, 500))
        de = f"{thousands}.000,00"
        en = f"{thousands},000.00"
    return de if locale == "de" else en


def _line(label: str, mention: str, tail: str = "") -> tuple[str, int, int]:
    """Assemble "label: mention tail" and return the mention's offsets."""
    prefix = f"{label}: "
    return prefix + mention + tail, len(prefix), len(prefix) + len(mention)


class _DocBuilder:
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        self.parts: list[str] = []
        self.annotations: list[Annotation] = []
        self.length = 0

    def add(self, text: str, spans: tuple[tuple[TargetType, int, int], ...] | list = ()) -> None:
        for type_, s, e in spans:
            self.annotations.append(
                Annotation(type=type_, fragments=((self.length + s, self.length + e),),
                           source="human", confidence=1.0)
            )
        self.parts.append(text)
        self.length += len(text) + 1  # newline joiner

    def build(self, metadata: DocumentMetadata) -> Document:
        text = "\n".join(self.parts)
        return Document(
            id=self.doc_id,
            text=text,
            tokens=baseline_tokenize(text),
            metadata=metadata,
            annotations=sort_annotations(self.annotations),
        )


def _add_mention_lines(
    builder: _DocBuilder,
    doc_idx: int,
    locale: str,
    remaining: dict[TargetType, int],
    rng: random.Random,
) -> str | None:
    """Append one line per type that still has budget; returns the ISIN used."""
    de = locale == "de"
    isin_code: str | None = None

    def take(type_: TargetType) -> bool:
        if remaining.get(type_, 0) > 0:
            remaining[type_] -= 1
            return True
        return False

    if take(T.ISIN):
        isin_code = _random_isin(rng)
        text, s, e = _line("ISIN", isin_code)
        builder.add(text, [(T.ISIN, s, e)])

    if take(T.CURRENCY):
        if doc_idx == 2:
            word = "US-Dollar" if de else "US Dollar"
        else:
            word = rng.choice(("Euro", "Euro", "EUR"))
        text, s, e = _line("Festgelegte Währung" if de else "Specified Currency", word)
        builder.add(text, [(T.CURRENCY, s, e)])

    if take(T.PRINCIPAL_AMOUNT):
        amount = _amount(rng, locale, high=True)
        text, s, e = _line("Gesamtnennbetrag" if de else "Aggregate Principal Amount", amount)
        builder.add(text, [(T.PRINCIPAL_AMOUNT, s, e)])

    if take(T.TYPE_OF_INSTRUMENT):
        mention = "Inhaberschuldverschreibung" if de else "Bearer Note"
        text, s, e = _line("Art des Instruments" if de else "Type of Instrument", mention)
        builder.add(text, [(T.TYPE_OF_INSTRUMENT, s, e)])

    # coupon: a document carries either a fixed or a complete variable line
    variable_ready = all(
        remaining.get(t, 0) > 0
        for t in (T.COUPON_VARIABLE_INDEX, T.COUPON_VARIABLE_MARGIN,
                  T.COUPON_VARIABLE_OPERATOR, T.COUPON_VARIABLE_TENOR)
    )
    if variable_ready:
        for t in (T.COUPON_VARIABLE_INDEX, T.COUPON_VARIABLE_MARGIN,
                  T.COUPON_VARIABLE_OPERATOR, T.COUPON_VARIABLE_TENOR):
            remaining[t] -= 1
        tenor = rng.choice(("3", "6"))
        if de:
            tenor_txt = f"{tenor}-Monats"
            index = rng.choice(("EURIBOR", "ESTR"))
            operator = "zuzüglich"
            margin = f"0,{rng.choice(('65', '85', '95'))} Prozentpunkte"
            prefix = "Verzinsung: "
        else:
            tenor_txt = f"{tenor}-month"
            index = rng.choice(("LIBOR", "SOFR"))
            operator = "plus"
            margin = f"0.{rng.choice(('65', '85', '95'))} percentage points"
            prefix = "Interest: "
        line = f"{prefix}{tenor_txt} {index} {operator} {margin}"
        pos = len(prefix)
        spans = [(T.COUPON_VARIABLE_TENOR, pos, pos + len(tenor_txt))]
        pos += len(tenor_txt) + 1
        spans.append((T.COUPON_VARIABLE_INDEX, pos, pos + len(index)))
        pos += len(index) + 1
        spans.append((T.COUPON_VARIABLE_OPERATOR, pos, pos + len(operator)))
        pos += len(operator) + 1
        spans.append((T.COUPON_VARIABLE_MARGIN, pos, pos + len(margin)))
        builder.add(line, spans)
    elif take(T.COUPON_FIXED):
        mention = "Fester Zinssatz" if de else "Fixed Rate"
        rate = rng.choice(("1,25", "2,10", "3,00")) if de else rng.choice(("1.25", "2.10", "3.00"))
        unit = "Prozent jährlich" if de else "per cent per annum"
        text, s, e = _line("Verzinsung" if de else "Interest", mention, f" {rate} {unit}")
        builder.add(text, [(T.COUPON_FIXED, s, e)])

    if take(T.REDEMPTION_AT_MATURITY):
        mention = "Rückzahlung zum Nennbetrag" if de else "Redemption at par"
        text, s, e = _line("Rückzahlung bei Endfälligkeit" if de else "Redemption at maturity", mention)
        builder.add(text, [(T.REDEMPTION_AT_MATURITY, s, e)])

    if take(T.REDEMPTION_AT_MATURITY_AMOUNT):
        amount = _amount(rng, locale, high=True)
        text, s, e = _line("Rückzahlungsbetrag bei Fälligkeit" if de else "Final Redemption Amount", amount)
        builder.add(text, [(T.REDEMPTION_AT_MATURITY_AMOUNT, s, e)])

    if take(T.EARLY_REDEMPTION):
        if de:
            line = "Vorzeitige Rückzahlung nach Wahl der Emittentin zulässig"
            builder.add(line, [(T.EARLY_REDEMPTION, 0, len("Vorzeitige Rückzahlung"))])
        else:
            line = "Early Redemption Right of the issuer applies"
            builder.add(line, [(T.EARLY_REDEMPTION, 0, len("Early Redemption Right"))])

    if take(T.EARLY_REDEMPTION_AMOUNT):
        amount = _amount(rng, locale, high=False)
        text, s, e = _line("Vorzeitiger Rückzahlungsbetrag" if de else "Early Redemption Amount", amount)
        builder.add(text, [(T.EARLY_REDEMPTION_AMOUNT, s, e)])

    if take(T.SPECIAL_TERMINATION):
        mention = "Sonderkündigungsrecht der Emittentin" if de else "Issuer Special Termination Right"
        tail = " gemäß § 4 der Bedingungen" if de else " as set out in Condition 4"
        builder.add(mention + tail, [(T.SPECIAL_TERMINATION, 0, len(mention))])

    if take(T.SPECIAL_TERMINATION_AMOUNT):
        amount = _amount(rng, locale, high=False)
        text, s, e = _line("Sonderkündigungsbetrag" if de else "Special Termination Amount", amount)
        builder.add(text, [(T.SPECIAL_TERMINATION_AMOUNT, s, e)])

    if doc_idx == 3 and remaining.get(T.STATUS_NON_PREFERRED, 0) > 0:
        remaining[T.STATUS_NON_PREFERRED] -= 1
        mention = "nachrangige Verbindlichkeiten" if de else "subordinated obligations"
        text, s, e = _line("Status", mention)
        builder.add(text, [(T.STATUS_NON_PREFERRED, s, e)])
    elif take(T.STATUS_SENIOR_NON_PREFERRED):
        text, s, e = _line("Status", "Senior Non-Preferred")
        builder.add(text, [(T.STATUS_SENIOR_NON_PREFERRED, s, e)])

    return isin_code


def generate_corpus(spec: FixtureSpec) -> list[Document]:
    """Build the corpus for ``spec``; same spec, byte-identical output."""
    rng = random.Random(spec.seed)
    remaining = {t: spec.counts.get(t, 0) for t in TargetType}
    n_docs = max(remaining.values(), default=0)
    if n_docs == 0 or all(v <= 0 for v in remaining.values()):
        return []
    # one variable-coupon line consumes four types at once, so variable counts
    # never force extra documents on their own
    docs: list[Document] = []
    for doc_idx in range(n_docs):
        if all(v <= 0 for v in remaining.values()):
            break
        locale = "de" if rng.random() < spec.de_share else "en"
        de = locale == "de"
        builder = _DocBuilder(f"prospectus-{spec.seed:03d}-{doc_idx:03d}")
        builder.add("Endgültige Bedingungen" if de else "Final Terms")
        builder.add(f"Emittentin: {rng.choice(_ISSUERS)}" if de
                    else f"Issuer: {rng.choice(_ISSUERS)}")
        builder.add(rng.choice(_FILLER[locale]))

        isin_code = _add_mention_lines(builder, doc_idx, locale, remaining, rng)

        if spec.noise and rng.random() < 0.5:
            builder.add(rng.choice(_NOISE))
        builder.add(rng.choice(_FILLER[locale]))

        if doc_idx == 4:
            issue_date = _dt.date(2026, 3, 15)
        else:
            issue_date = _dt.date(2024 + rng.randrange(2), 1 + rng.randrange(12), 1 + rng.randrange(28))
        issuer_group = "corporate" if doc_idx == 5 else "credit_institution"
        date_txt = issue_date.isoformat()
        builder.add(f"Begebungstag: {date_txt}" if de else f"Issue Date: {date_txt}")

        metadata = DocumentMetadata(
            isin=isin_code,
            issue_date=issue_date,
            issuer_group=issuer_group,
            asset_type="bond",
        )
        docs.append(builder.build(metadata))
    return docs


def generate_iaa_corpus(spec: FixtureSpec, annotators: tuple[str, str] = ("a1", "a2")) -> list[Document]:
    """Dual-annotator variant: the gold set under the first annotator id plus
    a jittered copy (boundary shifts, occasional drops and splits) under the
    second, mimicking disagreement between two human annotators."""
    rng = random.Random(spec.seed + 7919)
    docs = []
    for doc in generate_corpus(spec):
        first = [
            Annotation(type=a.type, fragments=a.fragments, source="human",
                       confidence=1.0, annotator_id=annotators[0])
            for a in doc.annotations
        ]
        second = []
        for a in doc.annotations:
            roll = rng.random()
            if roll < 0.1:
                continue  # missed annotation
            s, e = a.fragments[0]
            if roll < 0.35:
                s = max(0, s - rng.randrange(3))
                e = min(len(doc.text), e + rng.randrange(3))
                if s >= e:
                    continue
                fragments: tuple[tuple[int, int], ...] = ((s, e),)
            elif roll < 0.45 and e - s > 6:
                cut = s + (e - s) // 2
                fragments = ((s, cut - 1), (cut + 1, e))  # discontinuous variant
            else:
                fragments = a.fragments
            second.append(
                Annotation(type=a.type, fragments=fragments, source="human",
                           confidence=1.0, annotator_id=annotators[1])
            )
        docs.append(doc.with_annotations(sort_annotations(first + second)))
    return docs
