"""Embedded persistence: a global registry plus one database file per project.

Layout under the data directory:

    registry.db                  users and the project index
    projects/{id}/project.db     classes, images, annotations, settings

Each database is SQLite in WAL mode with foreign keys on. A store object
serializes all access through one connection and a re-entrant lock, which
satisfies the single-writer, multi-reader contract the service relies on.
Schema changes bump SCHEMA_VERSION; opening a file with a different version
fails loudly instead of guessing.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import sqlite3
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import ConflictError, InputError, LabelKitError, NotFoundError
from .geometry import geometry_coords, geometry_from_coords
from .preannotator import PipelineSettings
from .providers.base import ImageRef, normalize_label
from .records import (
    ANNOTATION_SOURCES,
    Annotation,
    ImageRecord,
    LabelClass,
    PROJECT_MODES,
    Project,
    allowed_geometry_kinds,
    geometry_within,
)

SCHEMA_VERSION = 1

_PBKDF2_ITERATIONS = 200_000

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")

_COLOR_WHEEL = (
    "#e6553f", "#3f8fe6", "#50b45a", "#e6b43f", "#a05fd2",
    "#e67e22", "#3fc8b4", "#d25f8f", "#8fa03f", "#5f6ed2",
)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _class_color(index: int) -> str:
    return _COLOR_WHEEL[index % len(_COLOR_WHEEL)]


def _connect(path: Path) -> sqlite3.Connection:
    conn = sqlite3.connect(str(path), check_same_thread=False, isolation_level=None)
    conn.execute("PRAGMA journal_mode=WAL")
    conn.execute("PRAGMA foreign_keys=ON")
    conn.row_factory = sqlite3.Row
    return conn


def _check_schema(conn: sqlite3.Connection, path: Path) -> None:
    row = conn.execute("SELECT value FROM meta WHERE key='schema_version'").fetchone()
    found = int(row["value"]) if row else None
    if found != SCHEMA_VERSION:
        raise LabelKitError(
            f"{path} has schema version {found}, this build expects {SCHEMA_VERSION}"
        )


@dataclass
class UpsertResult:
    """Outcome of one upsert call: how many landed, what got rejected and why."""

    inserted: int = 0
    rejected: List[Tuple[int, str]] = field(default_factory=list)


class ProjectStore:
    """All state for one project, behind a single serialized connection."""

    def __init__(self, db_path: Path, project_id: int) -> None:
        self.db_path = Path(db_path)
        self.project_id = project_id
        self._lock = threading.RLock()
        self._conn = _connect(self.db_path)
        _check_schema(self._conn, self.db_path)

    @classmethod
    def create(
        cls,
        db_path: Path,
        project_id: int,
        name: str,
        mode: str,
        class_names: Sequence[str],
        settings: PipelineSettings,
        created_at: str,
    ) -> "ProjectStore":
        db_path.parent.mkdir(parents=True, exist_ok=True)
        conn = _connect(db_path)
        try:
            conn.execute("BEGIN IMMEDIATE")
            conn.execute("CREATE TABLE meta (key TEXT PRIMARY KEY, value TEXT NOT NULL)")
            conn.execute(
                """CREATE TABLE classes (
                       id INTEGER PRIMARY KEY,
                       name TEXT NOT NULL UNIQUE,
                       display_color TEXT NOT NULL)"""
            )
            conn.execute(
                """CREATE TABLE images (
                       id INTEGER PRIMARY KEY,
                       path TEXT NOT NULL UNIQUE,
                       width INTEGER NOT NULL,
                       height INTEGER NOT NULL,
                       status TEXT NOT NULL DEFAULT 'unannotated',
                       done INTEGER NOT NULL DEFAULT 0,
                       revision INTEGER NOT NULL DEFAULT 0)"""
            )
            conn.execute(
                """CREATE TABLE annotations (
                       id INTEGER PRIMARY KEY,
                       image_id INTEGER NOT NULL
                           REFERENCES images(id) ON DELETE CASCADE,
                       class_id INTEGER NOT NULL
                           REFERENCES classes(id) ON DELETE CASCADE,
                       kind TEXT NOT NULL,
                       coords TEXT NOT NULL,
                       detector_score REAL,
                       verified_score REAL,
                       source TEXT NOT NULL,
                       state TEXT NOT NULL)"""
            )
            conn.execute(
                "CREATE INDEX annotations_by_image ON annotations(image_id)"
            )
            meta = {
                "schema_version": str(SCHEMA_VERSION),
                "name": name,
                "mode": mode,
                "settings": json.dumps(vars(settings)),
                "created_at": created_at,
            }
            conn.executemany(
                "INSERT INTO meta (key, value) VALUES (?, ?)", meta.items()
            )
            seen: List[str] = []
            for raw in class_names:
                cleaned = normalize_label(raw)
                if cleaned and cleaned not in seen:
                    seen.append(cleaned)
            if not seen:
                raise InputError("project needs at least one non-empty class")
            for i, cleaned in enumerate(sorted(seen)):
                conn.execute(
                    "INSERT INTO classes (name, display_color) VALUES (?, ?)",
                    (cleaned, _class_color(i)),
                )
            conn.execute("COMMIT")
        except BaseException:
            conn.execute("ROLLBACK")
            conn.close()
            raise
        conn.close()
        return cls(db_path, project_id)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    @contextmanager
    def _write(self):
        with self._lock:
            self._conn.execute("BEGIN IMMEDIATE")
            try:
                yield self._conn
            except BaseException:
                self._conn.execute("ROLLBACK")
                raise
            self._conn.execute("COMMIT")

    def _meta(self, key: str) -> str:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key=?", (key,)
            ).fetchone()
        if row is None:
            raise LabelKitError(f"project metadata missing key {key!r}")
        return row["value"]

    # -- project ------------------------------------------------------------

    def get_project(self) -> Project:
        return Project(
            id=self.project_id,
            name=self._meta("name"),
            mode=self._meta("mode"),
            settings=PipelineSettings(**json.loads(self._meta("settings"))),
            created_at=self._meta("created_at"),
        )

    def update_settings(self, settings: PipelineSettings) -> None:
        with self._write() as conn:
            conn.execute(
                "UPDATE meta SET value=? WHERE key='settings'",
                (json.dumps(vars(settings)),),
            )

    @property
    def mode(self) -> str:
        return self._meta("mode")

    # -- classes ------------------------------------------------------------

    def list_classes(self) -> List[LabelClass]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT id, name, display_color FROM classes ORDER BY name"
            ).fetchall()
        return [
            LabelClass(
                id=r["id"],
                project_id=self.project_id,
                name=r["name"],
                display_color=r["display_color"],
            )
            for r in rows
        ]

    def add_classes(self, names: Iterable[str]) -> List[LabelClass]:
        """Insert any genuinely new names; returns the records for all requested."""
        wanted = []
        for raw in names:
            cleaned = normalize_label(raw)
            if cleaned and cleaned not in wanted:
                wanted.append(cleaned)
        if not wanted:
            return []
        with self._write() as conn:
            existing = {
                r["name"] for r in conn.execute("SELECT name FROM classes").fetchall()
            }
            base = conn.execute("SELECT COUNT(*) AS n FROM classes").fetchone()["n"]
            for offset, name in enumerate(n for n in wanted if n not in existing):
                conn.execute(
                    "INSERT INTO classes (name, display_color) VALUES (?, ?)",
                    (name, _class_color(base + offset)),
                )
        by_name = {c.name: c for c in self.list_classes()}
        return [by_name[name] for name in wanted]

    # -- images -------------------------------------------------------------

    def ingest_image(self, path) -> ImageRecord:
        source = Path(path)
        if not source.is_file():
            raise InputError(f"image file not found: {source}")
        width, height = ImageRef(path=source).size()
        with self._write() as conn:
            try:
                cursor = conn.execute(
                    "INSERT INTO images (path, width, height) VALUES (?, ?, ?)",
                    (str(source.resolve()), width, height),
                )
            except sqlite3.IntegrityError as exc:
                raise ConflictError(f"image already ingested: {source}") from exc
            image_id = cursor.lastrowid
        return self.get_image(image_id)

    def ingest_folder(self, folder) -> Tuple[List[ImageRecord], List[Tuple[str, str]]]:
        root = Path(folder)
        if not root.is_dir():
            raise InputError(f"not a directory: {root}")
        records, skipped = [], []
        for candidate in sorted(root.iterdir()):
            if candidate.suffix.lower() not in _IMAGE_SUFFIXES:
                continue
            try:
                records.append(self.ingest_image(candidate))
            except (InputError, ConflictError) as exc:
                skipped.append((candidate.name, str(exc)))
        return records, skipped

    def _image_from_row(self, row) -> ImageRecord:
        return ImageRecord(
            id=row["id"],
            project_id=self.project_id,
            path=row["path"],
            width=row["width"],
            height=row["height"],
            status=row["status"],
        )

    def get_image(self, image_id: int) -> ImageRecord:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM images WHERE id=?", (image_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no image with id {image_id}")
        return self._image_from_row(row)

    def image_revision(self, image_id: int) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT revision FROM images WHERE id=?", (image_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no image with id {image_id}")
        return row["revision"]

    def list_images(
        self,
        *,
        status: Optional[str] = None,
        limit: Optional[int] = None,
        offset: int = 0,
    ) -> List[ImageRecord]:
        query = "SELECT * FROM images"
        params: list = []
        if status is not None:
            query += " WHERE status=?"
            params.append(status)
        query += " ORDER BY path"
        if limit is not None:
            query += " LIMIT ? OFFSET ?"
            params.extend([limit, offset])
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [self._image_from_row(r) for r in rows]

    def count_images(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) AS n FROM images").fetchone()["n"]

    def delete_image(self, image_id: int) -> None:
        with self._write() as conn:
            if conn.execute("DELETE FROM images WHERE id=?", (image_id,)).rowcount == 0:
                raise NotFoundError(f"no image with id {image_id}")

    def set_image_status(self, image_id: int, status: str) -> None:
        if status not in ("unannotated", "pending_review", "annotated", "failed"):
            raise InputError(f"unknown image status {status!r}")
        with self._write() as conn:
            if (
                conn.execute(
                    "UPDATE images SET status=? WHERE id=?", (status, image_id)
                ).rowcount
                == 0
            ):
                raise NotFoundError(f"no image with id {image_id}")

    def set_image_done(self, image_id: int, done: bool) -> ImageRecord:
        with self._write() as conn:
            if (
                conn.execute(
                    "UPDATE images SET done=? WHERE id=?", (1 if done else 0, image_id)
                ).rowcount
                == 0
            ):
                raise NotFoundError(f"no image with id {image_id}")
            self._refresh_status(conn, image_id)
        return self.get_image(image_id)

    def _refresh_status(self, conn, image_id: int) -> None:
        # annotated iff done or >= 1 accepted; else pending_review iff >= 1
        # pending; failed sticks until annotations arrive or change it
        row = conn.execute(
            """SELECT
                   (SELECT done FROM images WHERE id=:i) AS done,
                   (SELECT status FROM images WHERE id=:i) AS status,
                   (SELECT COUNT(*) FROM annotations
                     WHERE image_id=:i AND state='accepted') AS accepted,
                   (SELECT COUNT(*) FROM annotations
                     WHERE image_id=:i AND state='pending') AS pending""",
            {"i": image_id},
        ).fetchone()
        if row["done"] or row["accepted"] > 0:
            status = "annotated"
        elif row["pending"] > 0:
            status = "pending_review"
        elif row["status"] == "failed":
            status = "failed"
        else:
            status = "unannotated"
        conn.execute("UPDATE images SET status=? WHERE id=?", (status, image_id))

    # -- annotations --------------------------------------------------------

    def upsert_annotations(
        self,
        image_id: int,
        annotations: Sequence[Annotation],
        replace_sources: Set[str] = frozenset(),
    ) -> UpsertResult:
        """Atomically replace the given sources and insert the new set.

        Invalid items are rejected individually with a reason; valid ones
        still commit. The image status and revision update in the same
        transaction.
        """
        bad_sources = set(replace_sources) - set(ANNOTATION_SOURCES)
        if bad_sources:
            raise InputError(f"unknown replace sources: {sorted(bad_sources)}")
        image = self.get_image(image_id)
        mode = self.mode
        allowed_kinds = allowed_geometry_kinds(mode)
        result = UpsertResult()
        with self._write() as conn:
            class_ids = {
                r["id"] for r in conn.execute("SELECT id FROM classes").fetchall()
            }
            if replace_sources:
                marks = ",".join("?" for _ in replace_sources)
                conn.execute(
                    f"DELETE FROM annotations WHERE image_id=? AND source IN ({marks})",
                    [image_id, *sorted(replace_sources)],
                )
            for index, ann in enumerate(annotations):
                reason = None
                if ann.class_id not in class_ids:
                    reason = f"unknown class id {ann.class_id}"
                elif ann.kind not in allowed_kinds:
                    reason = f"geometry kind {ann.kind!r} not allowed in {mode} mode"
                elif not geometry_within(ann.geometry, image.width, image.height):
                    reason = "geometry outside image bounds"
                if reason is not None:
                    result.rejected.append((index, reason))
                    continue
                conn.execute(
                    """INSERT INTO annotations
                       (image_id, class_id, kind, coords, detector_score,
                        verified_score, source, state)
                       VALUES (?, ?, ?, ?, ?, ?, ?, ?)""",
                    (
                        image_id,
                        ann.class_id,
                        ann.kind,
                        json.dumps(geometry_coords(ann.geometry)),
                        ann.detector_score,
                        ann.verified_score,
                        ann.source,
                        ann.state,
                    ),
                )
                result.inserted += 1
            conn.execute(
                "UPDATE images SET revision = revision + 1 WHERE id=?", (image_id,)
            )
            self._refresh_status(conn, image_id)
        return result

    def _annotation_from_row(self, row) -> Annotation:
        return Annotation(
            id=row["id"],
            image_id=row["image_id"],
            class_id=row["class_id"],
            geometry=geometry_from_coords(row["kind"], json.loads(row["coords"])),
            detector_score=row["detector_score"],
            verified_score=row["verified_score"],
            source=row["source"],
            state=row["state"],
        )

    def list_annotations(
        self, image_id: int, *, states: Optional[Set[str]] = None
    ) -> List[Annotation]:
        self.get_image(image_id)
        query = "SELECT * FROM annotations WHERE image_id=?"
        params: list = [image_id]
        if states:
            query += " AND state IN (%s)" % ",".join("?" for _ in states)
            params.extend(sorted(states))
        query += " ORDER BY id"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [self._annotation_from_row(r) for r in rows]

    def set_annotation_states(self, annotation_ids: Sequence[int], state: str) -> int:
        if state not in ("pending", "accepted"):
            raise InputError(f"unknown annotation state {state!r}")
        if not annotation_ids:
            return 0
        changed = 0
        with self._write() as conn:
            images = set()
            for ann_id in annotation_ids:
                row = conn.execute(
                    "SELECT image_id FROM annotations WHERE id=?", (ann_id,)
                ).fetchone()
                if row is None:
                    raise NotFoundError(f"no annotation with id {ann_id}")
                images.add(row["image_id"])
                changed += conn.execute(
                    "UPDATE annotations SET state=? WHERE id=?", (state, ann_id)
                ).rowcount
            for image_id in images:
                conn.execute(
                    "UPDATE images SET revision = revision + 1 WHERE id=?", (image_id,)
                )
                self._refresh_status(conn, image_id)
        return changed

    def delete_annotations(self, image_id: int, annotation_ids: Optional[Sequence[int]] = None) -> int:
        self.get_image(image_id)
        with self._write() as conn:
            if annotation_ids is None:
                deleted = conn.execute(
                    "DELETE FROM annotations WHERE image_id=?", (image_id,)
                ).rowcount
            else:
                deleted = 0
                for ann_id in annotation_ids:
                    deleted += conn.execute(
                        "DELETE FROM annotations WHERE id=? AND image_id=?",
                        (ann_id, image_id),
                    ).rowcount
            conn.execute(
                "UPDATE images SET revision = revision + 1 WHERE id=?", (image_id,)
            )
            self._refresh_status(conn, image_id)
        return deleted

    def annotations_by_image(
        self, *, states: Optional[Set[str]] = None
    ) -> Dict[int, List[Annotation]]:
        query = "SELECT * FROM annotations"
        params: list = []
        if states:
            query += " WHERE state IN (%s)" % ",".join("?" for _ in states)
            params.extend(sorted(states))
        query += " ORDER BY image_id, id"
        out: Dict[int, List[Annotation]] = {}
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        for row in rows:
            out.setdefault(row["image_id"], []).append(self._annotation_from_row(row))
        return out

    # -- stats --------------------------------------------------------------

    def compute_stats(self) -> dict:
        """Dashboard numbers: status fractions, class totals, per-image histogram."""
        with self._lock:
            images = self._conn.execute(
                "SELECT id, status FROM images"
            ).fetchall()
            class_rows = self._conn.execute(
                """SELECT c.name AS name, COUNT(a.id) AS n
                   FROM classes c
                   LEFT JOIN annotations a ON a.class_id = c.id
                        AND a.state IN ('accepted', 'pending')
                   GROUP BY c.id ORDER BY c.name"""
            ).fetchall()
            per_image = self._conn.execute(
                """SELECT i.id AS id, COUNT(a.id) AS n
                   FROM images i
                   LEFT JOIN annotations a ON a.image_id = i.id
                        AND a.state IN ('accepted', 'pending')
                   GROUP BY i.id"""
            ).fetchall()

        total = len(images)
        completion = {status: 0.0 for status in ("unannotated", "pending_review", "annotated", "failed")}
        if total == 0:
            completion["unannotated"] = 1.0
        else:
            for row in images:
                completion[row["status"]] += 1
            completion = {k: v / total for k, v in completion.items()}

        buckets = {"0-5": 0, "6-10": 0, "11-15": 0, "16-20": 0, "21+": 0}
        for row in per_image:
            n = row["n"]
            if n <= 5:
                buckets["0-5"] += 1
            elif n <= 10:
                buckets["6-10"] += 1
            elif n <= 15:
                buckets["11-15"] += 1
            elif n <= 20:
                buckets["16-20"] += 1
            else:
                buckets["21+"] += 1

        return {
            "image_count": total,
            "completion": completion,
            "class_counts": {r["name"]: r["n"] for r in class_rows},
            "per_image_histogram": buckets,
        }

    # -- canonical dump -----------------------------------------------------

    def canonical_dump(self) -> dict:
        """Content-identical runs produce equal dumps: ids, timestamps, and
        absolute paths are excluded; everything is sorted by value."""
        project = self.get_project()
        classes = self.list_classes()
        names = {c.id: c.name for c in classes}
        images = []
        for record in self.list_images():
            annotations = sorted(
                (
                    (
                        names[a.class_id],
                        a.kind,
                        tuple(geometry_coords(a.geometry)),
                        a.source,
                        a.state,
                        a.detector_score,
                        a.verified_score,
                    )
                    for a in self.list_annotations(record.id)
                ),
            )
            images.append(
                {
                    "name": record.name,
                    "width": record.width,
                    "height": record.height,
                    "status": record.status,
                    "annotations": annotations,
                }
            )
        images.sort(key=lambda entry: entry["name"])
        return {
            "project": {
                "name": project.name,
                "mode": project.mode,
                "settings": vars(project.settings),
            },
            "classes": [(c.name, c.display_color) for c in classes],
            "images": images,
        }


class Store:
    """Registry of projects and users; hands out per-project stores."""

    def __init__(self, data_dir) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._registry = _connect(self.data_dir / "registry.db")
        self._projects: Dict[int, ProjectStore] = {}
        self._init_registry()

    def _init_registry(self) -> None:
        with self._lock:
            self._registry.execute("BEGIN IMMEDIATE")
            try:
                self._registry.execute(
                    "CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL)"
                )
                self._registry.execute(
                    """CREATE TABLE IF NOT EXISTS users (
                           id INTEGER PRIMARY KEY,
                           username TEXT NOT NULL UNIQUE,
                           password_hash TEXT NOT NULL,
                           salt TEXT NOT NULL,
                           created_at TEXT NOT NULL)"""
                )
                self._registry.execute(
                    """CREATE TABLE IF NOT EXISTS projects (
                           id INTEGER PRIMARY KEY,
                           name TEXT NOT NULL UNIQUE,
                           mode TEXT NOT NULL,
                           created_at TEXT NOT NULL)"""
                )
                self._registry.execute(
                    "INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)",
                    (str(SCHEMA_VERSION),),
                )
                self._registry.execute("COMMIT")
            except BaseException:
                self._registry.execute("ROLLBACK")
                raise
            _check_schema(self._registry, self.data_dir / "registry.db")

    def close(self) -> None:
        with self._lock:
            for project in self._projects.values():
                project.close()
            self._projects.clear()
            self._registry.close()

    # -- users --------------------------------------------------------------

    @staticmethod
    def _hash_password(password: str, salt: bytes) -> str:
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), salt, _PBKDF2_ITERATIONS
        )
        return digest.hex()

    def ensure_user(self, username: str, password: str) -> None:
        """Create the account if the username is new; never changes a password."""
        if not username.strip() or not password:
            raise InputError("username and password must be non-empty")
        salt = secrets.token_bytes(16)
        with self._lock:
            self._registry.execute(
                """INSERT OR IGNORE INTO users
                   (username, password_hash, salt, created_at) VALUES (?, ?, ?, ?)""",
                (username, self._hash_password(password, salt), salt.hex(), _now()),
            )

    def verify_user(self, username: str, password: str) -> bool:
        with self._lock:
            row = self._registry.execute(
                "SELECT password_hash, salt FROM users WHERE username=?", (username,)
            ).fetchone()
        if row is None:
            return False
        candidate = self._hash_password(password, bytes.fromhex(row["salt"]))
        return hmac.compare_digest(candidate, row["password_hash"])

    # -- projects -----------------------------------------------------------

    def _project_db(self, project_id: int) -> Path:
        return self.data_dir / "projects" / str(project_id) / "project.db"

    def create_project(
        self,
        name: str,
        mode: str,
        classes: Sequence[str],
        settings: Optional[PipelineSettings] = None,
    ) -> Project:
        cleaned_name = name.strip()
        if not cleaned_name:
            raise InputError("project name is empty")
        if mode not in PROJECT_MODES:
            raise InputError(f"unknown project mode {mode!r}")
        if not classes:
            raise InputError("project needs at least one class")
        resolved = settings if settings is not None else PipelineSettings()
        created = _now()
        with self._lock:
            try:
                cursor = self._registry.execute(
                    "INSERT INTO projects (name, mode, created_at) VALUES (?, ?, ?)",
                    (cleaned_name, mode, created),
                )
            except sqlite3.IntegrityError as exc:
                raise ConflictError(f"project name already taken: {cleaned_name}") from exc
            project_id = cursor.lastrowid
            try:
                store = ProjectStore.create(
                    self._project_db(project_id),
                    project_id,
                    cleaned_name,
                    mode,
                    classes,
                    resolved,
                    created,
                )
            except BaseException:
                self._registry.execute(
                    "DELETE FROM projects WHERE id=?", (project_id,)
                )
                raise
            self._projects[project_id] = store
        return store.get_project()

    def list_projects(self) -> List[Project]:
        with self._lock:
            rows = self._registry.execute(
                "SELECT id FROM projects ORDER BY id"
            ).fetchall()
        return [self.project(r["id"]).get_project() for r in rows]

    def find_project(self, name: str) -> Optional[Project]:
        with self._lock:
            row = self._registry.execute(
                "SELECT id FROM projects WHERE name=?", (name.strip(),)
            ).fetchone()
        return self.project(row["id"]).get_project() if row else None

    def project(self, project_id: int) -> ProjectStore:
        with self._lock:
            store = self._projects.get(project_id)
            if store is not None:
                return store
            row = self._registry.execute(
                "SELECT id FROM projects WHERE id=?", (project_id,)
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no project with id {project_id}")
            store = ProjectStore(self._project_db(project_id), project_id)
            self._projects[project_id] = store
            return store

    def delete_project(self, project_id: int) -> None:
        with self._lock:
            store = self._projects.pop(project_id, None)
            if store is not None:
                store.close()
            if (
                self._registry.execute(
                    "DELETE FROM projects WHERE id=?", (project_id,)
                ).rowcount
                == 0
            ):
                raise NotFoundError(f"no project with id {project_id}")
        db = self._project_db(project_id)
        for suffix in ("", "-wal", "-shm"):
            candidate = Path(str(db) + suffix)
            if candidate.exists():
                candidate.unlink()
