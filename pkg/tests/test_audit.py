# Severity Curriculum - Arabic medical QA generation

import sqlite3

import pytest

from models.audit import (
    count_order_violations, create_run, get_events, log_action, log_presentations, stage_presentation_counts,
)
from models.database import close_db, get_db_connection, init_db


@pytest.fixture
def ledger(tmp_path):
    path = str(tmp_path / 'ledger.db')
    init_db(path)
    yield path
    close_db(path)


def test_create_run_and_events(ledger):
    run_id = create_run(ledger, 'curriculum', 3, {'seed': 3}, dataset_hash='abc')
    log_action(ledger, run_id, 'run_started', 'curriculum on 6 records')
    log_action(ledger, run_id, 'run_finished', 'manifest.json')

    events = get_events(ledger, run_id=run_id)
    assert [event['action'] for event in events] == ['run_started', 'run_finished']
    assert get_events(ledger, action='run_finished')[0]['detail'] == 'manifest.json'
    assert len(get_events(ledger, run_id=run_id, limit=1, offset=1)) == 1

    row = get_db_connection(ledger).execute('SELECT * FROM runs WHERE id = ?', (run_id,)).fetchone()
    assert row['mode'] == 'curriculum'
    assert row['dataset_hash'] == 'abc'


def test_presentations_and_counts(ledger):
    run_id = create_run(ledger, 'curriculum', 0, {})
    rows = [(1, 1, 0, 'mild'), (2, 1, 0, 'mild'), (2, 1, 1, 'moderate'), (3, 1, 2, 'critical')]
    assert log_presentations(ledger, run_id, rows) == 4
    assert count_order_violations(ledger, run_id) == 0
    assert stage_presentation_counts(ledger, run_id) == {
        1: {'mild': 1},
        2: {'mild': 1, 'moderate': 1},
        3: {'critical': 1},
    }


def test_order_violations_counted(ledger):
    run_id = create_run(ledger, 'standard', 0, {})
    log_presentations(ledger, run_id, [(1, 1, 0, 'critical'), (1, 1, 1, 'moderate'), (2, 1, 2, 'critical')])
    assert count_order_violations(ledger, run_id) == 3


def test_constraints_reject_bad_rows(ledger):
    with pytest.raises(sqlite3.IntegrityError):
        create_run(ledger, 'distilled', 0, {})
    run_id = create_run(ledger, 'curriculum', 0, {})
    with pytest.raises(sqlite3.IntegrityError):
        log_presentations(ledger, run_id, [(4, 1, 0, 'mild')])
    # the failed transaction left nothing behind
    assert stage_presentation_counts(ledger, run_id) == {}
