"""Loading the target/source technical-document sets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import MissingDomain, ParseError

MANIFEST_NAME = "manifest.json"


class DomainRole(str, Enum):
    TARGET = "target"
    SOURCE = "source"


@dataclass(frozen=True)
class TechnicalDocument:
    doc_id: str
    domain_role: DomainRole
    domain_name: str
    title: str
    body: str

    def render(self) -> str:
        return f"[{self.doc_id}] {self.title} ({self.domain_role.value} domain: {self.domain_name})\n\n{self.body}"


@dataclass(frozen=True)
class Corpus:
    documents: tuple[TechnicalDocument, ...]
    target_domain: str
    source_domain: str

    def __post_init__(self) -> None:
        roles = {d.domain_role for d in self.documents}
        for role in DomainRole:
            if role not in roles:
                raise MissingDomain(f"corpus has no {role.value}-domain document")
        for d in self.documents:
            expected = self.target_domain if d.domain_role is DomainRole.TARGET else self.source_domain
            if d.domain_name != expected:
                raise ParseError(f"document {d.doc_id} names domain {d.domain_name!r}, expected {expected!r}")

    def by_role(self, role: DomainRole) -> list[TechnicalDocument]:
        return [d for d in self.documents if d.domain_role is role]

    def digest(self) -> str:
        h = hashlib.sha256()
        for d in self.documents:
            for part in (d.doc_id, d.domain_role.value, d.domain_name, d.title, d.body):
                h.update(part.encode("utf-8"))
                h.update(b"\0")
        return h.hexdigest()

    def documents_text(self) -> str:
        return "\n\n---\n\n".join(d.render() for d in self.documents)


def sample_corpus_path() -> Path:
    return Path(str(resources.files("analogy_agents") / "data" / "sample_corpus"))


def load(path: str | Path | None = None) -> Corpus:
    """Read a corpus directory (or its manifest file); defaults to the bundled sample."""
    path = Path(path) if path is not None else sample_corpus_path()
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{manifest_path}: {exc}") from exc
    base = manifest_path.parent

    try:
        target, source = manifest["target_domain"], manifest["source_domain"]
        entries = manifest["documents"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{manifest_path}: missing field {exc}") from exc

    docs = []
    seen = set()
    for entry in entries:
        try:
            doc_id, role, title, file = entry["id"], DomainRole(entry["role"]), entry["title"], entry["file"]
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"{manifest_path}: bad document entry {entry!r}") from exc
        if doc_id in seen:
            raise ParseError(f"duplicate document id {doc_id}")
        seen.add(doc_id)
        body = (base / file).read_text(encoding="utf-8").strip()
        if not body:
            raise ParseError(f"document {doc_id} ({file}) is empty")
        domain = target if role is DomainRole.TARGET else source
        docs.append(TechnicalDocument(doc_id, role, domain, title, body))
    return Corpus(tuple(docs), target, source)
