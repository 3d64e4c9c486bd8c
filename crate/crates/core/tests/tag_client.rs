use std::path::PathBuf;

use moodloom::tag_client::{ServiceMode, TagServiceConfig};
use moodloom::{TagClient, TagError, TagWeight};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tags")
}

fn client() -> TagClient {
    TagClient::new(TagServiceConfig::fixture(fixtures())).unwrap()
}

#[test]
fn top_tracks_truncate_to_limit() {
    let c = client();
    let two = c.fetch_top_tracks("mellow", 2).unwrap();
    assert_eq!(two.len(), 2);
    assert_eq!((two[0].artist.as_str(), two[0].title.as_str()), ("Slow Harbor", "Quiet River"));
    assert_eq!(c.fetch_top_tracks("Mellow", 50).unwrap().len(), 5);
}

#[test]
fn unknown_tag_and_service_error_are_empty() {
    let c = client();
    assert!(c.fetch_top_tracks("zzz-unknown", 10).unwrap().is_empty());
    assert!(c.fetch_top_tracks("never-fetched", 10).unwrap().is_empty());
    assert!(c.fetch_top_tags("Nobody", "Nothing", 20).unwrap().is_empty());
}

#[test]
fn top_tags_descending_with_string_counts() {
    let c = client();
    let tags = c.fetch_top_tags("Pale Lanterns", "Evening Glass", 20).unwrap();
    assert_eq!(
        tags,
        vec![
            TagWeight::new("sad", 100),
            TagWeight::new("melancholic", 35),
            TagWeight::new("love", 8)
        ]
    );
    let top = c.fetch_top_tags("Slow Harbor", "Quiet River", 1).unwrap();
    assert_eq!(top, vec![TagWeight::new("mellow", 100)]);
}

#[test]
fn fixture_mode_is_repeatable() {
    let a = client().fetch_top_tags("Slow Harbor", "Quiet River", 20).unwrap();
    let b = client().fetch_top_tags("Slow Harbor", "Quiet River", 20).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0].weight >= w[1].weight));
}

#[test]
fn live_mode_without_key_is_a_configuration_error() {
    let mut cfg = TagServiceConfig::fixture(fixtures());
    cfg.mode = ServiceMode::Live;
    cfg.api_key = None;
    assert!(matches!(TagClient::new(cfg), Err(TagError::Config(_))));
}
