"""

RbxCommon: provide the common base classes, error root and module level
utility functions shared by the estimator library and the experiment workflow.

"""

import hashlib
import json
import logging
from urllib.parse import urlparse

from rdflib import Graph, Literal, Namespace, URIRef

logger = logging.getLogger(__name__)

rbxNS = Namespace("rbx://v0.1/")

class RbxError(Exception):
    def __init__(self, msg):
        Exception.__init__(self, msg)  # to make __repr__() show class name
        self.msg = msg
    def __str__(self):
        return str(self.msg)

class URLSchemeNotSupportYet(RbxError):
    pass

class RbxObject(object):

    """

    Base class for every object that takes part in a workflow graph.

    Every RbxObject has an URL whose scheme must be listed in the
    class attribute ``supportedURLScheme``. Extra keyword arguments become
    instance attributes.

    >>> class Thing(RbxObject):
    ...     supportedURLScheme = ["thing"]
    >>> t = Thing("thing://localhost/a", color="red")
    >>> t.color
    'red'
    >>> Thing("file://localhost/a")
    Traceback (most recent call last):
    ...
    rbx.common.URLSchemeNotSupportYet: file is not supported yet

    """

    supportedURLScheme = []

    def __init__(self, URL, **attributes):
        URLParseResult = urlparse(URL)
        if URLParseResult.scheme not in self.__class__.supportedURLScheme:
            raise URLSchemeNotSupportYet("%s is not supported yet" % URLParseResult.scheme)
        self.URL = URL
        for k, v in attributes.items():
            if k not in self.__dict__:
                self.__dict__[k] = v

    @property
    def _RDFGraph(self):
        graph = Graph()
        for k, v in self.__dict__.items():
            if k == "URL": continue
            if k[0] == "_": continue
            if hasattr(v, "URL"):
                graph.add((URIRef(self.URL), rbxNS[k], URIRef(v.URL)))
        return graph

    @property
    def RDFTurtle(self):
        """
        Turtle representation of everything related to the object.
        """
        return self._RDFGraph.serialize(format="turtle")

def digest(obj):
    """
    Stable md5 hex digest of a JSON-serializable object (keys sorted).

    >>> digest({"b": 1, "a": [1, 2]}) == digest({"a": [1, 2], "b": 1})
    True
    """
    content = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.md5(content.encode("utf-8")).hexdigest()

def literal(obj):
    """Wrap a JSON-serializable object as an RDF literal."""
    return Literal(json.dumps(obj, sort_keys=True))
