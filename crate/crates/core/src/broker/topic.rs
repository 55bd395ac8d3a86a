//! Topic names and filters with MQTT-style `+` / `#` wildcards.

use std::fmt;

use super::BrokerError;

const SEP: char = '/';

pub fn validate_topic(topic: &str) -> Result<(), BrokerError> {
    if topic.is_empty() {
        return Err(BrokerError::InvalidTopic("empty topic".into()));
    }
    if topic.len() > u16::MAX as usize {
        return Err(BrokerError::InvalidTopic("topic longer than 65535 bytes".into()));
    }
    if topic.contains(['+', '#', '\0']) {
        return Err(BrokerError::InvalidTopic(format!("'{topic}' contains a wildcard or NUL")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Segment {
    Level(String),
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TopicFilter {
    pattern: String,
    segments: Vec<Segment>,
}

impl TopicFilter {
    pub fn parse(pattern: &str) -> Result<Self, BrokerError> {
        if pattern.is_empty() {
            return Err(BrokerError::InvalidFilter("empty filter".into()));
        }
        if pattern.len() > u16::MAX as usize || pattern.contains('\0') {
            return Err(BrokerError::InvalidFilter(format!("'{pattern}' is too long or has NUL")));
        }
        let levels: Vec<&str> = pattern.split(SEP).collect();
        let last = levels.len() - 1;
        let mut segments = Vec::with_capacity(levels.len());
        for (i, level) in levels.iter().enumerate() {
            let seg = match *level {
                "+" => Segment::Single,
                "#" if i == last => Segment::Multi,
                "#" => {
                    return Err(BrokerError::InvalidFilter(format!(
                        "'{pattern}': '#' is only allowed as the final level"
                    )))
                }
                l if l.contains(['+', '#']) => {
                    return Err(BrokerError::InvalidFilter(format!("'{pattern}': wildcards must occupy a whole level")))
                }
                l => Segment::Level(l.to_string()),
            };
            segments.push(seg);
        }
        Ok(Self { pattern: pattern.to_string(), segments })
    }

    pub fn as_str(&self) -> &str {
        &self.pattern
    }

    pub fn matches(&self, topic: &str) -> bool {
        let mut levels = topic.split(SEP);
        for seg in &self.segments {
            match seg {
                Segment::Multi => return true,
                Segment::Single => {
                    if levels.next().is_none() {
                        return false;
                    }
                }
                Segment::Level(want) => match levels.next() {
                    Some(l) if l == want => {}
                    _ => return false,
                },
            }
        }
        levels.next().is_none()
    }
}

impl fmt::Display for TopicFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pattern)
    }
}

impl std::str::FromStr for TopicFilter {
    type Err = BrokerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

pub fn topic_matches(filter: &TopicFilter, topic: &str) -> bool {
    filter.matches(topic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(f: &str, t: &str) -> bool {
        TopicFilter::parse(f).unwrap().matches(t)
    }

    #[test]
    fn wildcard_examples() {
        assert!(m("robot/+/state", "robot/3/state"));
        assert!(m("robot/#", "robot/3/cmd_vel"));
        assert!(!m("robot/+", "robot/3/state"));
        assert!(m("robot/#", "robot"));
        assert!(!m("robot/+", "robot"));
        assert!(m("intent/#", "intent/ssvep"));
        assert!(!m("intent/ssvep", "intent/ssvep/x"));
        assert!(m("+/+", "a/b"));
        assert!(m("a//b", "a//b"));
        assert!(m("+", ""));
    }

    #[test]
    fn bad_filters_rejected() {
        assert!(TopicFilter::parse("").is_err());
        assert!(TopicFilter::parse("a/#/b").is_err());
        assert!(TopicFilter::parse("a/b+").is_err());
        assert!(TopicFilter::parse("a#").is_err());
        assert!(TopicFilter::parse("#").is_ok());
    }

    #[test]
    fn bad_topics_rejected() {
        assert!(validate_topic("").is_err());
        assert!(validate_topic("a/+/b").is_err());
        assert!(validate_topic("a/#").is_err());
        assert!(validate_topic("a\0").is_err());
        assert!(validate_topic("robot/1/state").is_ok());
    }

    fn topic_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec("[a-z0-9_]{0,4}", 1..6)
            .prop_map(|v| v.join("/"))
            .prop_filter("topics are non-empty", |t| !t.is_empty())
    }

    proptest! {
        #[test]
        fn hash_matches_everything(t in topic_strategy()) {
            prop_assert!(m("#", &t));
        }

        #[test]
        fn literal_filter_matches_itself(t in topic_strategy()) {
            prop_assert!(m(&t, &t));
        }
    }
}
