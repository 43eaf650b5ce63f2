"""

RbxData: the data objects exchanged between workflow tasks. Every task of an
experiment run reads and writes local files; this module wraps them with the
timestamp and existence queries the controller needs.

"""

import json
import logging
import os
import platform
import shutil
from urllib.parse import urlparse

from .common import RbxError, RbxObject

logger = logging.getLogger(__name__)

class FileNotExistError(RbxError):
    pass

class RbxDataObjectBase(RbxObject):

    """
    Represent the common interface for a data object.
    """

    @property
    def timeStamp(self):
        raise NotImplementedError(self.URL)

    @property
    def exists(self):
        raise NotImplementedError(self.URL)

    def __str__(self):
        return self.URL

class RbxLocalFile(RbxDataObjectBase):

    """
    Represent a data object that can be accessed as a file in a local
    filesystem.

    >>> f = RbxLocalFile("file://localhost/test.json")
    >>> f.localFileName == "/test.json"
    True
    """

    supportedURLScheme = ["file"]

    def __init__(self, URL, readOnly=False, **attributes):
        RbxDataObjectBase.__init__(self, URL, **attributes)
        self.localFileName = urlparse(URL).path
        self.readOnly = readOnly

    def __repr__(self):
        return "RbxLocalFile(%r)" % self.URL

    @property
    def path(self):
        return self.localFileName

    @property
    def timeStamp(self):
        if not os.path.exists(self.localFileName):
            raise FileNotExistError("No such file:%r on %r" % (self.localFileName, platform.node()))
        return os.stat(self.localFileName).st_mtime

    @property
    def exists(self):
        return os.path.exists(self.localFileName)

    def clean(self):
        if os.path.exists(self.path):
            logger.info("Removing %s" % self.path)
            if os.path.isdir(self.path):
                shutil.rmtree(self.path)
            else:
                os.remove(self.path)

    def readJSON(self):
        with open(self.path) as ifs:
            return json.load(ifs)

    def writeJSON(self, obj):
        """Write obj as JSON, creating the parent directory. Returns True when
        the file content changed (an unchanged file keeps its timestamp)."""
        content = json.dumps(obj, indent=1, sort_keys=True)
        if self.exists:
            with open(self.path) as ifs:
                if ifs.read() == content:
                    return False
        dirname = os.path.dirname(self.path)
        if dirname and not os.path.isdir(dirname):
            os.makedirs(dirname)
        with open(self.path, "w") as ofs:
            ofs.write(content)
        logger.debug("wrote %s" % self.path)
        return True

def makeRbxLocalFile(aLocalFileName, readOnly=False, **attributes):
    """
    >>> f = makeRbxLocalFile("/tmp/report.json")
    >>> f.localFileName == "/tmp/report.json"
    True
    >>> f.URL
    'file://localhost/tmp/report.json'
    """
    aLocalFileName = os.path.abspath(aLocalFileName)
    return RbxLocalFile("file://localhost%s" % aLocalFileName, readOnly, **attributes)
