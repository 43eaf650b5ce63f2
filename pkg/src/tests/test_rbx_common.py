import pytest
from rdflib import URIRef

from rbx.common import RbxError, RbxObject, URLSchemeNotSupportYet, digest, literal, rbxNS
from rbx.data import RbxLocalFile

class Holder(RbxObject):
    supportedURLScheme = ["holder"]

class TestRbxObject:
    def test___init__(self):
        obj = Holder("holder://localhost/a", seed=3)
        assert obj.URL == "holder://localhost/a"
        assert obj.seed == 3

    def test_unsupported_scheme(self):
        with pytest.raises(URLSchemeNotSupportYet):
            Holder("file://localhost/a")

    def test_rdf_graph(self):
        f = RbxLocalFile("file://localhost/tmp/config.json")
        obj = Holder("holder://localhost/a", config=f, _hidden=f, plain=1)
        triples = set(obj._RDFGraph)
        assert triples == {(URIRef(obj.URL), rbxNS["config"], URIRef(f.URL))}
        assert "config.json" in obj.RDFTurtle

class TestRbxError:
    def test_str(self):
        e = RbxError("bad seed")
        assert str(e) == "bad seed"
        assert e.msg == "bad seed"
        assert "RbxError" in repr(e)

class TestDigest:
    def test_key_order(self):
        assert digest({"a": 1, "b": [1, 2]}) == digest({"b": [1, 2], "a": 1})
        assert digest({"a": 1}) != digest({"a": 2})
        assert len(digest({})) == 32

    def test_literal(self):
        assert str(literal({"b": 1, "a": 2})) == '{"a": 2, "b": 1}'
