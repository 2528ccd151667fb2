//! Plain-text artifacts for a study: per-episode CSV, savings summary CSV,
//! sensitivity CSV, and a self-contained SVG line chart of the dependent
//! variable. All emitters are pure string builders so identical inputs give
//! byte-identical files.

use std::fmt::Write as _;

use crate::agent::schedule::AlphaSchedule;
use crate::harness::{EfficiencyStudy, ExperimentReport, SensitivityStudy};

/// One row per episode across all reports, in report order.
/// Columns: episode, technique, final_users, terminal, objective_rt, objective_er.
pub fn episodes_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from("episode,technique,final_users,terminal,objective_rt,objective_er\n");
    for report in reports {
        for e in &report.episodes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.episode,
                report.technique.label(),
                e.final_users,
                e.terminal,
                e.objective.rt_threshold_ms,
                e.objective.er_threshold,
            );
        }
    }
    out
}

fn alpha_label(alpha: AlphaSchedule) -> String {
    match alpha {
        AlphaSchedule::Fixed(a) => format!("{a}"),
        AlphaSchedule::VisitDecay => "decaying".into(),
    }
}

/// Summary rows for both phases of an efficiency study.
pub fn savings_csv(study: &EfficiencyStudy) -> String {
    let mut out = String::from(
        "phase,technique,mean_final_users,convergence_episode,non_terminal,saving_vs_baseline,saving_vs_random\n",
    );
    let phases: [(&str, &[ExperimentReport], f64, f64); 2] = [
        (
            "initial",
            &study.initial,
            study.initial_savings.saving_vs_baseline,
            study.initial_savings.saving_vs_random,
        ),
        (
            "transfer",
            &study.transfer,
            study.transfer_savings.saving_vs_baseline,
            study.transfer_savings.saving_vs_random,
        ),
    ];
    for (phase, reports, vs_b, vs_r) in phases {
        for report in reports {
            let mean = report
                .last_window_mean
                .map(|m| format!("{m}"))
                .unwrap_or_default();
            let conv = report
                .convergence_episode
                .map(|c| c.to_string())
                .unwrap_or_default();
            // Savings are defined for the decaying-ε agent only.
            let (sb, sr) = if report.technique.label() == "eps-decay" {
                (format!("{vs_b}"), format!("{vs_r}"))
            } else {
                (String::new(), String::new())
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                phase,
                report.technique.label(),
                mean,
                conv,
                report.non_terminal_count,
                sb,
                sr,
            );
        }
    }
    out
}

/// One row per sensitivity cell plus the reference run.
pub fn sensitivity_csv(study: &SensitivityStudy) -> String {
    let mut out =
        String::from("alpha,gamma,convergence_episode,mean_final_users,non_terminal\n");
    let mut row = |alpha: String, gamma: f64, report: &ExperimentReport| {
        let conv = report
            .convergence_episode
            .map(|c| c.to_string())
            .unwrap_or_default();
        let mean = report
            .last_window_mean
            .map(|m| format!("{m}"))
            .unwrap_or_default();
        let _ = writeln!(out, "{alpha},{gamma},{conv},{mean},{}", report.non_terminal_count);
    };
    for cell in &study.cells {
        row(alpha_label(cell.alpha), cell.gamma, &cell.report);
    }
    row("0.5".into(), 0.5, &study.reference);
    out
}

const CHART_WIDTH: f64 = 840.0;
const CHART_HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Episode number against final total users, one polyline per report.
/// Self-contained SVG, no external references.
pub fn line_chart_svg(reports: &[ExperimentReport], title: &str) -> String {
    let max_episode = reports
        .iter()
        .map(|r| r.episodes.len().saturating_sub(1))
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let max_users = reports
        .iter()
        .flat_map(|r| r.episodes.iter().map(|e| e.final_users))
        .max()
        .unwrap_or(1)
        .max(1) as f64;

    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |episode: f64| MARGIN_LEFT + episode / max_episode * plot_w;
    let y = |users: f64| MARGIN_TOP + (1.0 - users / max_users) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        title
    );

    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{MARGIN_TOP:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">episode</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        CHART_HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">final users</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    // Tick labels on both axes: 5 even divisions.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let ex = frac * max_episode;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x(ex),
            y0 + 16.0,
            ex.round() as u64
        );
        let uy = frac * max_users;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y(uy) + 3.0,
            uy.round() as u64
        );
    }

    // One polyline per report, legend entry alongside.
    for (i, report) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = report
            .episodes
            .iter()
            .map(|e| format!("{:.2},{:.2}", x(e.episode as f64), y(e.final_users as f64)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            color,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 14.0 + i as f64 * 18.0;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"/>"#,
            ly - 4.0,
            lx + 22.0,
            ly - 4.0,
            color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            lx + 28.0,
            ly,
            report.technique.label()
        );
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TestObjective;
    use crate::harness::{EpisodeOutcome, Technique};

    fn toy_report(technique: Technique, values: &[u64]) -> ExperimentReport {
        let obj = TestObjective { rt_threshold_ms: 1500.0, er_threshold: 0.20 };
        let outcomes = values
            .iter()
            .enumerate()
            .map(|(i, &v)| EpisodeOutcome {
                episode: i as u64,
                final_users: v,
                terminal: true,
                objective: obj,
            })
            .collect();
        ExperimentReport::from_outcomes(technique, 0, outcomes)
    }

    #[test]
    fn episodes_csv_has_header_and_rows() {
        let reports =
            vec![toy_report(Technique::Baseline, &[88, 88]), toy_report(Technique::EpsDecay, &[60])];
        let csv = episodes_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "episode,technique,final_users,terminal,objective_rt,objective_er"
        );
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,baseline,88,true,1500,0.2");
        assert_eq!(lines[3], "0,eps-decay,60,true,1500,0.2");
    }

    #[test]
    fn episodes_csv_is_deterministic() {
        let reports = vec![toy_report(Technique::Random, &[55, 61, 58])];
        assert_eq!(episodes_csv(&reports), episodes_csv(&reports));
    }

    #[test]
    fn svg_is_structurally_sound() {
        let reports = vec![
            toy_report(Technique::EpsDecay, &[120, 80, 66, 66]),
            toy_report(Technique::Baseline, &[88, 88, 88, 88]),
        ];
        let svg = line_chart_svg(&reports, "final users per episode");
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("eps-decay"));
        assert!(svg.contains("baseline"));
        assert!(svg.contains("#1f77b4"));
        // No external references; the file must be self-contained.
        assert!(!svg.contains("href"));
    }

    #[test]
    fn svg_handles_single_episode_reports() {
        let svg = line_chart_svg(&[toy_report(Technique::Baseline, &[88])], "one point");
        assert!(svg.contains("<polyline"));
    }
}
