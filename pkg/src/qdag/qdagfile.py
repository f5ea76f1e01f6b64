"""Line-oriented text form of a Q-DAG, the hand-off artifact between the
off-line compiler and an on-line evaluator.

::

    QDAG 1
    VAR <name> <k> <val_1> ... <val_k>
    NODE <id> NUM <decimal>
    NODE <id> ESN <var> <val>
    NODE <id> MUL <k> <id_1> ... <id_k>
    NODE <id> ADD <k> <id_1> ... <id_k>
    QUERY <var> <val> <id>

Numbers are written with ``repr`` so they parse back to the same double.
"""

from __future__ import annotations

from .core import Add, Esn, Mul, Num, QDag, QDagError

FORMAT_VERSION = 1


class QDagFormatError(QDagError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def serialize_qdag(q: QDag) -> str:
    lines = [f"QDAG {FORMAT_VERSION}"]
    for var, vals in q.domains.items():
        lines.append(f"VAR {var} {len(vals)} {' '.join(vals)}")
    for nid, node in enumerate(q.nodes):
        t = type(node)
        if t is Num:
            lines.append(f"NODE {nid} NUM {node.value!r}")
        elif t is Esn:
            lines.append(f"NODE {nid} ESN {node.var} {node.val}")
        else:
            op = "MUL" if t is Mul else "ADD"
            ids = " ".join(map(str, node.inputs))
            lines.append(f"NODE {nid} {op} {len(node.inputs)} {ids}")
    for (var, val), nid in q.queries.items():
        lines.append(f"QUERY {var} {val} {nid}")
    return "\n".join(lines) + "\n"


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise QDagFormatError(lineno, f"bad {what} {tok!r}") from None


def parse_qdag(text: str) -> QDag:
    """Rebuild the exact node list of a serialized Q-DAG.

    Nodes are appended as written, without folding, so ids and shapes come
    back unchanged; a record that duplicates an earlier node is an error.
    """
    domains: dict[str, tuple[str, ...]] = {}
    records = []
    version_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if not version_seen:
            if line[0] != "QDAG" or len(line) != 2:
                raise QDagFormatError(lineno, "expected a 'QDAG <version>' header")
            if _int(line[1], lineno, "version") != FORMAT_VERSION:
                raise QDagFormatError(lineno, f"unsupported format version {line[1]}")
            version_seen = True
            continue
        tag = line[0]
        if tag == "VAR":
            if records:
                raise QDagFormatError(lineno, "VAR after the first NODE")
            if len(line) < 3:
                raise QDagFormatError(lineno, "malformed VAR record")
            k = _int(line[2], lineno, "value count")
            if len(line) != 3 + k or k < 1:
                raise QDagFormatError(lineno, f"VAR {line[1]} declares {k} values")
            if line[1] in domains:
                raise QDagFormatError(lineno, f"variable {line[1]} declared twice")
            domains[line[1]] = tuple(line[3:])
        elif tag in ("NODE", "QUERY"):
            records.append((lineno, line))
        else:
            raise QDagFormatError(lineno, f"unknown record {tag!r}")
    if not version_seen:
        raise QDagFormatError(0, "empty input")

    try:
        q = QDag(domains, fold=False)
    except QDagError as exc:
        raise QDagFormatError(0, str(exc)) from None
    for lineno, line in records:
        try:
            if line[0] == "QUERY":
                if len(line) != 4:
                    raise QDagFormatError(lineno, "malformed QUERY record")
                q.set_query(line[1], line[2], _int(line[3], lineno, "node id"))
                continue
            _add_node(q, lineno, line)
        except QDagFormatError:
            raise
        except QDagError as exc:
            raise QDagFormatError(lineno, str(exc)) from None
    return q.seal()


def _add_node(q: QDag, lineno: int, line: list[str]) -> None:
    if len(line) < 3:
        raise QDagFormatError(lineno, "malformed NODE record")
    nid = _int(line[1], lineno, "node id")
    if nid != len(q.nodes):
        raise QDagFormatError(lineno, f"expected node id {len(q.nodes)}, got {nid}")
    kind = line[2]
    if kind == "NUM":
        if len(line) != 4:
            raise QDagFormatError(lineno, "malformed NUM record")
        try:
            p = float(line[3])
        except ValueError:
            raise QDagFormatError(lineno, f"bad number {line[3]!r}") from None
        got = q.mk_num(p)
    elif kind == "ESN":
        if len(line) != 5:
            raise QDagFormatError(lineno, "malformed ESN record")
        got = q.mk_esn(line[3], line[4])
    elif kind in ("MUL", "ADD"):
        if len(line) < 4:
            raise QDagFormatError(lineno, f"malformed {kind} record")
        k = _int(line[3], lineno, "input count")
        if k < 2 or len(line) != 4 + k:
            raise QDagFormatError(lineno, f"{kind} record declares {k} inputs")
        ids = [_int(t, lineno, "node id") for t in line[4:]]
        for i in ids:
            if not 0 <= i < nid:
                raise QDagFormatError(lineno, f"node {nid} refers to undeclared node {i}")
        got = q.mk_mul(ids) if kind == "MUL" else q.mk_add(ids)
    else:
        raise QDagFormatError(lineno, f"unknown node kind {kind!r}")
    if got != nid:
        raise QDagFormatError(lineno, f"node {nid} duplicates node {got}")
