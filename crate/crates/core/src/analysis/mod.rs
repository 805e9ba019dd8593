//! Questionnaire scoring and the paired-study statistics.

pub mod dist;
pub mod questionnaire;
pub mod stats;
pub mod study;

pub use questionnaire::{score_ieq, score_ssq, ScoreError, SsqScores, SsqWeighting};
pub use stats::{paired_t, shapiro_wilk, spearman, wilcoxon_signed_rank, StatsError, TestKind, TestResult};
pub use study::{
    analyze_study, Comparison, Correlation, Descriptives, Instrument, MeasureKind, MeasureReport, Observation,
    QuestionnaireResponse, StudyError, StudyReport, StudyTable,
};
