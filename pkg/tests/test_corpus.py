from __future__ import annotations

import json

import pytest

from analogy_agents.corpus import DomainRole, load, sample_corpus_path
from analogy_agents.errors import MissingDomain, ParseError

from conftest import write_corpus


def test_bundled_sample_corpus():
    corpus = load()
    assert (corpus.target_domain, corpus.source_domain) == ("household fan", "ejector")
    assert {d.domain_role for d in corpus.documents} == {DomainRole.TARGET, DomainRole.SOURCE}
    assert len(corpus.by_role(DomainRole.TARGET)) >= 1 and len(corpus.by_role(DomainRole.SOURCE)) >= 1


def test_load_is_pure():
    assert load(sample_corpus_path()) == load(sample_corpus_path() / "manifest.json")
    assert load().digest() == load().digest()


def test_only_target_documents(tmp_path):
    root = write_corpus(tmp_path, [("T1", "target", "fan text")])
    with pytest.raises(MissingDomain):
        load(root)


def test_empty_body(tmp_path):
    root = write_corpus(tmp_path, [("T1", "target", "fan"), ("S1", "source", "   \n")])
    with pytest.raises(ParseError):
        load(root)


def test_bad_manifest_json(tmp_path):
    (tmp_path / "manifest.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load(tmp_path)


def test_duplicate_ids(tmp_path):
    root = write_corpus(tmp_path, [("T1", "target", "a"), ("S1", "source", "b")])
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["documents"].append(dict(manifest["documents"][0]))
    (root / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ParseError):
        load(root)


def test_documents_text_mentions_every_title(mini_corpus):
    text = mini_corpus.documents_text()
    assert all(d.title in text and d.body in text for d in mini_corpus.documents)
