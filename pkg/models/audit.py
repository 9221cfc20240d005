# Severity Curriculum - Arabic medical QA generation

import json

from models.database import get_db_connection, get_db_transaction
from models.severity import SeverityLabel


def create_run(db_path, mode, seed, config, dataset_hash=None):
    """Register a training run and return its id"""
    with get_db_transaction(db_path) as conn:
        cursor = conn.execute("""
            INSERT INTO runs (mode, seed, config, dataset_hash)
            VALUES (?, ?, ?, ?)
        """, (mode, seed, json.dumps(config, ensure_ascii=False, sort_keys=True), dataset_hash))
        return cursor.lastrowid


def log_action(db_path, run_id, action, detail):
    """Log a run milestone to the events table"""
    conn = get_db_connection(db_path)
    conn.execute("""
        INSERT INTO events (run_id, action, detail)
        VALUES (?, ?, ?)
    """, (run_id, action, detail))
    conn.commit()


def log_presentations(db_path, run_id, presentations):
    """presentations: iterable of (stage, epoch, record_id, severity key or None)"""
    rows = [(run_id, stage, epoch, record_id, severity) for stage, epoch, record_id, severity in presentations]
    with get_db_transaction(db_path) as conn:
        conn.executemany("""
            INSERT INTO presentations (run_id, stage, epoch, record_id, severity)
            VALUES (?, ?, ?, ?, ?)
        """, rows)
    return len(rows)


def get_events(db_path, run_id=None, action=None, limit=100, offset=0):
    """Get events with optional filters"""
    conn = get_db_connection(db_path)

    where_conditions = []
    params = []

    if run_id:
        where_conditions.append("run_id = ?")
        params.append(run_id)

    if action:
        where_conditions.append("action = ?")
        params.append(action)

    where_clause = ""
    if where_conditions:
        where_clause = "WHERE " + " AND ".join(where_conditions)

    params.extend([limit, offset])

    rows = conn.execute(f"""
        SELECT * FROM events
        {where_clause}
        ORDER BY id
        LIMIT ? OFFSET ?
    """, params).fetchall()

    return [dict(row) for row in rows]


def count_order_violations(db_path, run_id):
    """Critical records before stage 3 plus moderate records in stage 1"""
    conn = get_db_connection(db_path)
    return conn.execute("""
        SELECT COUNT(*) FROM presentations
        WHERE run_id = ?
          AND ((severity = ? AND stage < 3) OR (severity = ? AND stage < 2))
    """, (run_id, SeverityLabel.CRITICAL.key, SeverityLabel.MODERATE.key)).fetchone()[0]


def stage_presentation_counts(db_path, run_id):
    """{stage: {severity: count}} with 'unlabeled' for NULL severities"""
    conn = get_db_connection(db_path)
    rows = conn.execute("""
        SELECT stage, COALESCE(severity, 'unlabeled') AS severity, COUNT(*) AS total
        FROM presentations
        WHERE run_id = ?
        GROUP BY stage, severity
        ORDER BY stage
    """, (run_id,)).fetchall()

    counts = {}
    for row in rows:
        counts.setdefault(row['stage'], {})[row['severity']] = row['total']
    return counts
