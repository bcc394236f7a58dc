import { describe, expect, it } from "vitest";
import {
  filledCount,
  hypothesisRows,
  outcomeBanner,
  progressLine,
  transcriptLines,
  type SessionView,
} from "../src/state.js";

function view(partial: Partial<SessionView>): SessionView {
  return {
    session_id: "s1",
    phase: "await_verbal",
    outcome: null,
    hypothesis: ["unknown", "unknown", "unknown"],
    candidates_count: 12,
    candidates: [],
    excluded: [],
    guesses_used: 0,
    max_guesses: 10,
    steps_used: 0,
    max_steps: 30,
    pending: null,
    transcript: [],
    decisions: [],
    ...partial,
  };
}

describe("hypothesisRows", () => {
  it("renders a fresh session as all unfilled", () => {
    const rows = hypothesisRows(view({}));
    expect(rows).toHaveLength(3);
    for (const row of rows) {
      expect(row.value).toBe("—");
      expect(row.label).toMatch(/^Question \d+$/);
    }
  });

  it("labels touched rows with the asked question text", () => {
    const v = view({
      hypothesis: ["yes", "unknown", "no"],
      decisions: [
        { qid: 0, question: "Is it red?", decision: "yes", candidates_count: 5 },
        { qid: 2, question: "Can it fly?", decision: "no", candidates_count: 3 },
      ],
    });
    const rows = hypothesisRows(v);
    expect(rows[0]).toEqual({ qid: 0, label: "Is it red?", value: "yes" });
    expect(rows[1]).toEqual({ qid: 1, label: "Question 2", value: "—" });
    expect(rows[2]).toEqual({ qid: 2, label: "Can it fly?", value: "no" });
  });

  it("treats an unknown write as filled once decided", () => {
    const v = view({
      hypothesis: ["unknown", "unknown", "unknown"],
      decisions: [
        { qid: 1, question: "Alive?", decision: "unknown", candidates_count: 12 },
      ],
    });
    expect(hypothesisRows(v)[1]).toEqual(
      { qid: 1, label: "Alive?", value: "unknown" });
  });
});

describe("filledCount", () => {
  it("counts only decided slots", () => {
    const v = view({
      decisions: [
        { qid: 0, question: "A?", decision: "yes", candidates_count: 4 },
        { qid: 1, question: "B?", decision: "unknown", candidates_count: 4 },
      ],
      hypothesis: ["yes", "unknown", "unknown"],
    });
    expect(filledCount(v)).toBe(2);
    expect(filledCount(view({}))).toBe(0);
  });
});

describe("progressLine", () => {
  it("summarises budgets and candidates", () => {
    const line = progressLine(view({
      steps_used: 4, guesses_used: 1, candidates_count: 7,
    }));
    expect(line).toContain("4/30 steps");
    expect(line).toContain("1/10 guesses");
    expect(line).toContain("7 candidate");
  });
});

describe("outcomeBanner", () => {
  it("is null while the game runs", () => {
    expect(outcomeBanner(view({}))).toBeNull();
  });

  it("announces a win with the step and guess spend", () => {
    const text = outcomeBanner(view({
      outcome: "win", steps_used: 11, guesses_used: 2,
    }));
    expect(text).toContain("11 steps");
    expect(text).toContain("2 guess");
  });

  it("announces a loss as the player's win", () => {
    const text = outcomeBanner(view({ outcome: "loss" }));
    expect(text).toMatch(/you win/i);
  });
});

describe("transcriptLines", () => {
  it("prefixes speakers and keeps order", () => {
    const v = view({
      transcript: [
        { role: "sys", kind: "question", text: "Is it red?" },
        { role: "user", kind: "answer", text: "nope" },
        { role: "sys", kind: "guess", text: "I guess it is X." },
      ],
    });
    expect(transcriptLines(v)).toEqual([
      "Agent: Is it red?",
      "You: nope",
      "Agent: I guess it is X.",
    ]);
  });
});
