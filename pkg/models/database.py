# Severity Curriculum - Arabic medical QA generation

import os
import sqlite3
from contextlib import contextmanager
from threading import local

# Thread-local storage for ledger connections, one per database path
_local = local()


def _connections():
    if not hasattr(_local, 'connections'):
        _local.connections = {}
    return _local.connections


def get_db_connection(db_path):
    """Get the run-ledger connection for the current thread"""
    key = db_path if db_path == ':memory:' else os.path.abspath(db_path)
    connections = _connections()
    if key not in connections:
        if key != ':memory:':
            os.makedirs(os.path.dirname(key), exist_ok=True)
        connection = sqlite3.connect(key, check_same_thread=False)
        connection.row_factory = sqlite3.Row
        connection.execute('PRAGMA foreign_keys = ON')
        connections[key] = connection
    return connections[key]


@contextmanager
def get_db_transaction(db_path):
    """Context manager for ledger transactions with proper locking"""
    conn = get_db_connection(db_path)
    try:
        conn.execute('BEGIN IMMEDIATE')
        yield conn
        conn.commit()
    except Exception:
        conn.rollback()
        raise


def close_db(db_path):
    key = db_path if db_path == ':memory:' else os.path.abspath(db_path)
    connection = _connections().pop(key, None)
    if connection is not None:
        connection.close()


def reset_db(db_path):
    """Close and remove an existing ledger file so a run starts from an empty one"""
    close_db(db_path)
    if db_path != ':memory:' and os.path.exists(db_path):
        os.remove(db_path)


def init_db(db_path):
    """Initialize the ledger with tables and indexes"""
    conn = get_db_connection(db_path)

    conn.executescript("""
        -- One row per training invocation
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            mode TEXT NOT NULL CHECK (mode IN ('baseline', 'standard', 'curriculum')),
            seed INTEGER NOT NULL,
            config TEXT NOT NULL,
            dataset_hash TEXT
        );

        -- Every sample shown to the optimizer
        CREATE TABLE IF NOT EXISTS presentations (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER NOT NULL,
            stage INTEGER NOT NULL CHECK (stage IN (1, 2, 3)),
            epoch INTEGER NOT NULL,
            record_id INTEGER NOT NULL,
            severity TEXT CHECK (severity IN ('mild', 'moderate', 'critical')),
            FOREIGN KEY (run_id) REFERENCES runs (id) ON DELETE CASCADE
        );

        -- Audit trail of run milestones
        CREATE TABLE IF NOT EXISTS events (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            run_id INTEGER,
            action TEXT NOT NULL,
            detail TEXT,
            FOREIGN KEY (run_id) REFERENCES runs (id) ON DELETE CASCADE
        );
    """)

    conn.executescript("""
        CREATE INDEX IF NOT EXISTS idx_presentations_run_stage ON presentations (run_id, stage);
        CREATE INDEX IF NOT EXISTS idx_events_run ON events (run_id);
        CREATE INDEX IF NOT EXISTS idx_events_action ON events (action);
    """)

    conn.commit()
