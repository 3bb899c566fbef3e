# -*- coding: utf-8 -*-
"""File formats.

    .dt    raw dense tensor: b"DTEN", u32 version (1), u32 order D,
           D x u64 dims, then prod(dims) float64 values in C order;
           all little-endian.
    .json  decomposition document:
           {"schema_version": 1, "dims": [...],
            "terms": [{"structure": "full" | "rank1",
                       "factors": [[[row], ...], ...],
                       "core": {"dims": [...], "data": [...]}}, ...]}

Writes go to a temporary file in the target directory and are renamed into
place, so failures never leave partial files.
"""
import os
import json
import tempfile
import numpy as np
from .sbtd import Sbtd, TuckerTerm, CoreStructure
from .utils import DocumentError, _process_tensor

DT_MAGIC = b"DTEN"
DT_VERSION = 1
SCHEMA_VERSION = 1


def atomic_write(path, data):
    """Writes `data` (bytes or str) to `path` via temp file + rename."""
    mode = 'wb' if isinstance(data, bytes) else 'w'
    dirname = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix='.tmp-')
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


#### Raw tensors #############################################################
def dt_bytes(t):
    t = _process_tensor(t)
    header = (DT_MAGIC + np.array([DT_VERSION, t.ndim], dtype='<u4').tobytes()
              + np.array(t.shape, dtype='<u8').tobytes())
    return header + t.astype('<f8').tobytes(order='C')


def write_dt(path, t):
    atomic_write(path, dt_bytes(t))


def read_dt(path):
    with open(path, 'rb') as f:
        buf = f.read()
    if buf[:4] != DT_MAGIC:
        raise ValueError("%s: not a .dt file (bad magic %r)" % (path, buf[:4]))
    version, order = np.frombuffer(buf, dtype='<u4', count=2, offset=4)
    if version != DT_VERSION:
        raise ValueError("%s: unsupported .dt version %s" % (path, version))
    dims = tuple(int(n) for n in
                 np.frombuffer(buf, dtype='<u8', count=order, offset=12))
    offset = 12 + 8 * int(order)
    size = int(np.prod(dims, dtype=np.int64))
    if len(buf) != offset + 8 * size:
        raise ValueError("%s: expected %s values for dims %s, file holds %s "
                         "bytes of data" % (path, size, dims, len(buf) - offset))
    data = np.frombuffer(buf, dtype='<f8', count=size, offset=offset)
    return data.astype(np.float64).reshape(dims)


#### Decompositions ##########################################################
def sbtd_to_document(s):
    terms = []
    for r, term in enumerate(s):
        if not term.structure.builtin:
            raise ValueError("terms[%s]: custom structure '%s' can't be "
                             "serialized" % (r, term.structure.name))
        terms.append({'structure': term.structure.name,
                      'factors': [u.tolist() for u in term.factors],
                      'core': {'dims': list(term.core.shape),
                               'data': term.core.ravel().tolist()}})
    return {'schema_version': SCHEMA_VERSION, 'dims': list(s.dims),
            'terms': terms}


def _field(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError("%s: missing field '%s'" % (where, key))
    return doc[key]


def _int_list(value, where):
    if not (isinstance(value, list) and len(value) > 0 and all(
            isinstance(v, int) and not isinstance(v, bool) and v > 0
            for v in value)):
        raise DocumentError("%s: must be a nonempty list of positive "
                            "integers (got %s)" % (where, value))
    return tuple(value)


def _array(value, where, ndim):
    try:
        a = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DocumentError("%s: not a numeric array (%s)" % (where, e))
    if a.ndim != ndim or a.size == 0:
        raise DocumentError("%s: expected a nonempty %sD array (got shape %s)"
                            % (where, ndim, a.shape))
    if not np.all(np.isfinite(a)):
        raise DocumentError("%s: non-finite values" % where)
    return a


def sbtd_from_document(doc):
    """Parses a decomposition document into an `Sbtd`; every error is a
    `DocumentError` naming the offending field.
    """
    version = _field(doc, 'schema_version', 'document')
    if version != SCHEMA_VERSION:
        raise DocumentError("schema_version: unsupported (got %s)" % version)
    dims = _int_list(_field(doc, 'dims', 'document'), 'dims')
    terms_doc = _field(doc, 'terms', 'document')
    if not isinstance(terms_doc, list) or len(terms_doc) == 0:
        raise DocumentError("terms: must be a nonempty list")

    terms = []
    for r, tdoc in enumerate(terms_doc):
        where = 'terms[%s]' % r
        structure = _field(tdoc, 'structure', where)
        if structure not in CoreStructure.SUPPORTED:
            raise DocumentError("%s.structure: must be one of %s (got %s)" % (
                where, ', '.join(CoreStructure.SUPPORTED), structure))
        factors = _field(tdoc, 'factors', where)
        if not isinstance(factors, list) or len(factors) != len(dims):
            raise DocumentError("%s.factors: need %s factor matrices" % (
                where, len(dims)))
        factors = [_array(u, '%s.factors[%s]' % (where, d), 2)
                   for d, u in enumerate(factors)]
        core = _field(tdoc, 'core', where)
        cdims = _int_list(_field(core, 'dims', where + '.core'),
                          where + '.core.dims')
        data = _array(_field(core, 'data', where + '.core'),
                      where + '.core.data', 1)
        if data.size != int(np.prod(cdims)):
            raise DocumentError("%s.core.data: %s values for dims %s" % (
                where, data.size, list(cdims)))
        try:
            terms.append(TuckerTerm(factors, data.reshape(cdims), structure))
        except ValueError as e:
            raise DocumentError("%s: %s" % (where, e))
    try:
        return Sbtd(terms, dims)
    except ValueError as e:
        raise DocumentError(str(e))


def save_sbtd(path, s):
    atomic_write(path, json.dumps(sbtd_to_document(s)) + '\n')


def load_sbtd(path):
    with open(path, 'r') as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise DocumentError("%s: malformed JSON (%s)" % (path, e))
    return sbtd_from_document(doc)


#### Reports #################################################################
def to_record(obj):
    """JSON-ready dict of a namedtuple report (tuples become lists)."""
    out = {}
    for k, v in obj._asdict().items():
        if isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, (np.floating, np.integer, np.bool_)):
            v = v.item()
        out[k] = v
    return out


def dumps_record(record):
    """One-line JSON; non-finite floats are written as `Infinity`/`NaN`, which
    `json.loads` reads back.
    """
    return json.dumps(record, sort_keys=False)


def format_text(record):
    lines = []
    for k, v in record.items():
        if isinstance(v, float):
            v = '%.17g' % v
        lines.append('%s: %s' % (k, v))
    return '\n'.join(lines)
