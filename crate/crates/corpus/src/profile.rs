//! Profile synthesis through the reference database engine, plus the
//! anti-forensics arms: row deletion with secure-delete off leaves carvable
//! bytes behind; vacuuming compacts them away.

use crate::values::ValueFactory;
use crate::{AntiForensics, CorpusError, CorpusSpec, GroundTruth, Recoverability};
use d2wfp_core::artifact::{ArtifactKind, Category};
use d2wfp_core::browser::{cookie_value, is_search_field, write_cache2_entry};
use d2wfp_core::timestamp::{format_utc, normalize_timestamp, EpochKind};
use rusqlite::Connection;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

fn rfc3339(unix: i64) -> String {
    format_utc(&normalize_timestamp(unix, EpochKind::UnixSeconds).unwrap().at)
}

fn open_engine(path: &Path) -> Result<Connection, CorpusError> {
    let conn = Connection::open(path)?;
    conn.pragma_update(None, "journal_mode", "MEMORY")?;
    conn.pragma_update(None, "secure_delete", "OFF")?;
    conn.pragma_update(None, "auto_vacuum", "NONE")?;
    Ok(conn)
}

/// Write places/cookies/formhistory stores via the engine, the logins
/// store, and cache2 entries. Ground-truth rows are appended as Live.
pub fn generate_profile(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    profile_dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    fs::create_dir_all(profile_dir)?;
    write_places(spec, factory, profile_dir, truth)?;
    write_cookies(spec, factory, profile_dir, truth)?;
    write_formhistory(spec, factory, profile_dir, truth)?;
    write_logins(spec, factory, profile_dir, truth)?;
    write_cache2(spec, factory, profile_dir, truth)?;
    Ok(())
}

fn write_places(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let path = dir.join("places.sqlite");
    let conn = open_engine(&path)?;
    conn.execute_batch(
        "CREATE TABLE moz_places (id INTEGER PRIMARY KEY, url LONGVARCHAR,
            title LONGVARCHAR, rev_host LONGVARCHAR, visit_count INTEGER DEFAULT 0,
            hidden INTEGER DEFAULT 0 NOT NULL, typed INTEGER DEFAULT 0 NOT NULL,
            frecency INTEGER DEFAULT -1 NOT NULL, last_visit_date INTEGER, guid TEXT);
         CREATE TABLE moz_historyvisits (id INTEGER PRIMARY KEY, from_visit INTEGER,
            place_id INTEGER, visit_date INTEGER, visit_type INTEGER, session INTEGER);
         CREATE TABLE moz_bookmarks (id INTEGER PRIMARY KEY, type INTEGER,
            fk INTEGER DEFAULT NULL, parent INTEGER, position INTEGER,
            title LONGVARCHAR, dateAdded INTEGER, lastModified INTEGER, guid TEXT);
         CREATE TABLE moz_anno_attributes (id INTEGER PRIMARY KEY, name VARCHAR(32) UNIQUE NOT NULL);
         CREATE TABLE moz_annos (id INTEGER PRIMARY KEY, place_id INTEGER NOT NULL,
            anno_attribute_id INTEGER, content LONGVARCHAR, flags INTEGER DEFAULT 0,
            expiration INTEGER DEFAULT 0, type INTEGER DEFAULT 0,
            dateAdded INTEGER DEFAULT 0, lastModified INTEGER DEFAULT 0);",
    )?;
    let tx = conn.unchecked_transaction()?;
    {
        let mut place = tx.prepare(
            "INSERT INTO moz_places (url, title, rev_host, visit_count, hidden, typed,
             frecency, last_visit_date, guid) VALUES (?1, ?2, ?3, 1, 0, 1, 100, ?4, ?5)",
        )?;
        let mut visit = tx.prepare(
            "INSERT INTO moz_historyvisits (from_visit, place_id, visit_date, visit_type, session)
             VALUES (0, ?1, ?2, 1, 0)",
        )?;
        for i in 0..spec.history {
            let url = factory.history_url(i);
            let host = url.split("://").nth(1).unwrap().split('/').next().unwrap();
            let rev_host: String = host.chars().rev().collect::<String>() + ".";
            let at = factory.prtime(0, i);
            place.execute(rusqlite::params![
                url,
                factory.history_title(i),
                rev_host,
                at,
                factory.hexstr("placeguid", i, 12),
            ])?;
            let place_id = tx.last_insert_rowid();
            visit.execute(rusqlite::params![place_id, at])?;
            truth.push(
                Recoverability::Live,
                Category::BrowsingHistory,
                ArtifactKind::Urls,
                &url,
                &url,
                vec![rfc3339(factory.unix_time(0, i))],
            );
        }
        // bookmarks reference their own places rows
        let mut bookmark = tx.prepare(
            "INSERT INTO moz_bookmarks (type, fk, parent, position, title, dateAdded, lastModified, guid)
             VALUES (1, ?1, 2, ?2, ?3, ?4, ?4, ?5)",
        )?;
        for i in 0..spec.bookmarks {
            let url = factory.bookmark_url(i);
            let host = url.split("://").nth(1).unwrap().split('/').next().unwrap();
            let rev_host: String = host.chars().rev().collect::<String>() + ".";
            let at = factory.prtime(1, i);
            place.execute(rusqlite::params![
                url,
                factory.bookmark_title(i),
                rev_host,
                at,
                factory.hexstr("bmplaceguid", i, 12),
            ])?;
            let place_id = tx.last_insert_rowid();
            bookmark.execute(rusqlite::params![
                place_id,
                i,
                factory.bookmark_title(i),
                at,
                factory.hexstr("bmguid", i, 12),
            ])?;
            truth.push(
                Recoverability::Live,
                Category::BrowsingHistory,
                ArtifactKind::Bookmarks,
                &url,
                factory.bookmark_title(i),
                vec![rfc3339(factory.unix_time(1, i))],
            );
        }
        // download annotations
        tx.execute(
            "INSERT INTO moz_anno_attributes (name) VALUES ('downloads/destinationFileURI')",
            [],
        )?;
        let dest_attr = tx.last_insert_rowid();
        tx.execute(
            "INSERT INTO moz_anno_attributes (name) VALUES ('downloads/metaData')",
            [],
        )?;
        let meta_attr = tx.last_insert_rowid();
        let mut anno = tx.prepare(
            "INSERT INTO moz_annos (place_id, anno_attribute_id, content, flags, expiration,
             type, dateAdded, lastModified) VALUES (?1, ?2, ?3, 0, 4, 3, ?4, ?4)",
        )?;
        for i in 0..spec.downloads {
            let source = factory.download_source(i);
            let host = source.split("://").nth(1).unwrap().split('/').next().unwrap();
            let rev_host: String = host.chars().rev().collect::<String>() + ".";
            let at = factory.prtime(2, i);
            place.execute(rusqlite::params![
                source,
                format!("download source {i:04}"),
                rev_host,
                at,
                factory.hexstr("dlplaceguid", i, 12),
            ])?;
            let place_id = tx.last_insert_rowid();
            let destination = factory.download_destination(i);
            anno.execute(rusqlite::params![place_id, dest_attr, destination, at])?;
            let end_ms = factory.unix_time(2, i) * 1000 + 500;
            let meta = format!(r#"{{"state":1,"endTime":{end_ms},"fileSize":{}}}"#, 1024 + i);
            anno.execute(rusqlite::params![place_id, meta_attr, meta, at])?;
            truth.push(
                Recoverability::Live,
                Category::Downloads,
                ArtifactKind::DownloadFiles,
                &destination,
                &destination,
                vec![rfc3339(factory.unix_time(2, i))],
            );
        }
    }
    tx.commit()?;
    conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    Ok(())
}

fn write_cookies(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let path = dir.join("cookies.sqlite");
    let conn = open_engine(&path)?;
    conn.execute_batch(
        "CREATE TABLE moz_cookies (id INTEGER PRIMARY KEY,
            originAttributes TEXT NOT NULL DEFAULT '', name TEXT, value TEXT,
            host TEXT, path TEXT, expiry INTEGER, lastAccessed INTEGER,
            creationTime INTEGER, isSecure INTEGER, isHttpOnly INTEGER);",
    )?;
    let tx = conn.unchecked_transaction()?;
    {
        let mut insert = tx.prepare(
            "INSERT INTO moz_cookies (originAttributes, name, value, host, path, expiry,
             lastAccessed, creationTime, isSecure, isHttpOnly)
             VALUES ('', ?1, ?2, ?3, '/', ?4, ?5, ?5, 0, 1)",
        )?;
        for i in 0..spec.cookies {
            let host = factory.cookie_host(i);
            let name = factory.cookie_name(i);
            let at = factory.prtime(3, i);
            insert.execute(rusqlite::params![
                name,
                factory.cookie_payload(i),
                host,
                factory.unix_time(3, i) + 86_400 * 30,
                at,
            ])?;
            truth.push(
                Recoverability::Live,
                Category::CacheTemp,
                ArtifactKind::Cookies,
                cookie_value(&host, &name),
                &host,
                vec![rfc3339(factory.unix_time(3, i))],
            );
        }
    }
    tx.commit()?;
    conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    Ok(())
}

fn write_formhistory(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let path = dir.join("formhistory.sqlite");
    let conn = open_engine(&path)?;
    conn.execute_batch(
        "CREATE TABLE moz_formhistory (id INTEGER PRIMARY KEY, fieldname LONGVARCHAR NOT NULL,
            value LONGVARCHAR NOT NULL, timesUsed INTEGER, firstUsed INTEGER,
            lastUsed INTEGER, guid TEXT);",
    )?;
    let tx = conn.unchecked_transaction()?;
    {
        let mut insert = tx.prepare(
            "INSERT INTO moz_formhistory (fieldname, value, timesUsed, firstUsed, lastUsed, guid)
             VALUES (?1, ?2, 1, ?3, ?3, ?4)",
        )?;
        for i in 0..spec.forms {
            let fieldname = factory.form_field(i);
            let value = factory.form_value(i);
            insert.execute(rusqlite::params![
                fieldname,
                value,
                factory.prtime(4, i),
                factory.hexstr("formguid", i, 12),
            ])?;
            let kind = if is_search_field(&fieldname) {
                ArtifactKind::SearchQueries
            } else {
                ArtifactKind::UsageSession
            };
            truth.push(
                Recoverability::Live,
                Category::SqliteDbForm,
                kind,
                &value,
                &value,
                vec![rfc3339(factory.unix_time(4, i))],
            );
        }
    }
    tx.commit()?;
    conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    Ok(())
}

fn write_logins(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let mut entries = Vec::new();
    for i in 0..spec.logins {
        let host = factory.login_host(i);
        let ms = factory.unix_time(5, i) * 1000;
        entries.push(format!(
            r#"{{"id":{id},"hostname":"{host}","httpRealm":null,"formSubmitURL":"{host}","usernameField":"username","passwordField":"password","encryptedUsername":"MDIEEPga{u}","encryptedPassword":"MDIEEPgb{p}","guid":"{{{g}}}","encType":1,"timeCreated":{ms},"timeLastUsed":{ms2},"timePasswordChanged":{ms},"timesUsed":1}}"#,
            id = i + 1,
            host = host,
            u = factory.hexstr("encu", i, 24),
            p = factory.hexstr("encp", i, 24),
            g = factory.hexstr("loginguid", i, 12),
            ms = ms,
            ms2 = ms + 60_000,
        ));
        truth.push(
            Recoverability::Live,
            Category::SecurityLogins,
            ArtifactKind::Usernames,
            &host,
            &host,
            vec![rfc3339(factory.unix_time(5, i))],
        );
    }
    let json = format!(
        r#"{{"nextId":{},"logins":[{}],"potentiallyVulnerablePasswords":[],"dismissedBreachAlertsByLoginGUID":{{}},"version":3}}"#,
        spec.logins + 1,
        entries.join(",")
    );
    fs::write(dir.join("logins.json"), json)?;
    Ok(())
}

fn write_cache2(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let entries_dir = dir.join("cache2").join("entries");
    fs::create_dir_all(&entries_dir)?;
    for i in 0..spec.cache_entries {
        let url = factory.cache_url(i);
        let key = format!(":{url}");
        let body = factory.bytes("cachebody", i, 200 + (i as usize % 5) * 300);
        let fetched = factory.unix_time(6, i) as u32;
        let entry = write_cache2_entry(&key, &body, 1 + i % 3, fetched, fetched - 60);
        let name = hex::encode_upper(&Sha256::digest(key.as_bytes())[..20]);
        fs::write(entries_dir.join(name), entry)?;
        truth.push(
            Recoverability::Live,
            Category::CacheTemp,
            ArtifactKind::WebsiteContent,
            &url,
            &url,
            vec![rfc3339(factory.unix_time(6, i))],
        );
    }
    Ok(())
}

/// Row-deletion and vacuum arms. Deleted rows flip their ground-truth
/// expectation to carvable (delete-rows) or unrecoverable (vacuum).
pub fn apply_antiforensics(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    profile_dir: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    if spec.anti_forensics == AntiForensics::None {
        return Ok(());
    }
    let outcome = match spec.anti_forensics {
        AntiForensics::DeleteRows => Recoverability::Carvable,
        _ => Recoverability::Unrecoverable,
    };
    let fraction = spec.delete_fraction;

    // selection is a deterministic contiguous range per (seed, store)
    let deleted_history = factory.deleted_range("history", spec.history, fraction);
    let deleted_bookmarks = factory.deleted_range("bookmarks", spec.bookmarks, fraction);
    let deleted_downloads = factory.deleted_range("downloads", spec.downloads, fraction);
    let deleted_cookies = factory.deleted_range("cookies", spec.cookies, fraction);
    let deleted_forms = factory.deleted_range("forms", spec.forms, fraction);

    {
        let conn = open_engine(&profile_dir.join("places.sqlite"))?;
        let tx = conn.unchecked_transaction()?;
        for i in &deleted_history {
            // history deletion removes the place row and its visits
            tx.execute(
                "DELETE FROM moz_historyvisits WHERE place_id IN
                 (SELECT id FROM moz_places WHERE url = ?1)",
                [factory.history_url(*i)],
            )?;
            tx.execute(
                "DELETE FROM moz_places WHERE url = ?1",
                [factory.history_url(*i)],
            )?;
        }
        for i in &deleted_bookmarks {
            // bookmark deletion keeps the place row, as the browser does
            tx.execute(
                "DELETE FROM moz_bookmarks WHERE guid = ?1",
                [factory.hexstr("bmguid", *i, 12)],
            )?;
        }
        for i in &deleted_downloads {
            tx.execute(
                "DELETE FROM moz_annos WHERE content = ?1",
                [factory.download_destination(*i)],
            )?;
        }
        tx.commit()?;
        if spec.anti_forensics == AntiForensics::Vacuum {
            conn.execute_batch("VACUUM;")?;
        }
        conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    }
    {
        let conn = open_engine(&profile_dir.join("cookies.sqlite"))?;
        let tx = conn.unchecked_transaction()?;
        for i in &deleted_cookies {
            tx.execute(
                "DELETE FROM moz_cookies WHERE name = ?1",
                [factory.cookie_name(*i)],
            )?;
        }
        tx.commit()?;
        if spec.anti_forensics == AntiForensics::Vacuum {
            conn.execute_batch("VACUUM;")?;
        }
        conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    }
    {
        let conn = open_engine(&profile_dir.join("formhistory.sqlite"))?;
        let tx = conn.unchecked_transaction()?;
        for i in &deleted_forms {
            tx.execute(
                "DELETE FROM moz_formhistory WHERE guid = ?1",
                [factory.hexstr("formguid", *i, 12)],
            )?;
        }
        tx.commit()?;
        if spec.anti_forensics == AntiForensics::Vacuum {
            conn.execute_batch("VACUUM;")?;
        }
        conn.close().map_err(|(_, e)| CorpusError::Engine(e))?;
    }

    // update expectations in the manifest
    let reclassify = |truth: &mut GroundTruth, value: &str| {
        for entry in truth.entries.iter_mut() {
            if entry.value == value && entry.expect == Recoverability::Live {
                entry.expect = outcome;
            }
        }
    };
    for i in &deleted_history {
        reclassify(truth, &factory.history_url(*i));
    }
    for i in &deleted_bookmarks {
        reclassify(truth, &factory.bookmark_url(*i));
    }
    for i in &deleted_downloads {
        reclassify(truth, &factory.download_destination(*i));
    }
    for i in &deleted_cookies {
        reclassify(
            truth,
            &cookie_value(&factory.cookie_host(*i), &factory.cookie_name(*i)),
        );
    }
    for i in &deleted_forms {
        reclassify(truth, &factory.form_value(*i));
    }
    Ok(())
}
