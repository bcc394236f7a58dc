// Mirrors of the play service's JSON payloads plus the pure view-model
// helpers the DOM layer renders from. No game logic lives here: every
// value shown is a restatement of the latest server response.

export type Intent = "yes" | "no" | "unknown";

export interface Persona {
  id: string;
  name: string;
}

export interface CreateResponse {
  session_id: string;
  persona_roster: Persona[];
}

export interface MoveResponse {
  kind: "question" | "guess";
  text: string;
  candidates_count: number;
  guesses_used: number;
}

export interface Decision {
  qid: number;
  question: string;
  decision: Intent;
  candidates_count: number;
}

export interface TranscriptEntry {
  role: "sys" | "user";
  kind: string;
  text: string;
}

export interface SessionView {
  session_id: string;
  phase: string;
  outcome: "win" | "loss" | null;
  hypothesis: Intent[];
  candidates_count: number;
  candidates: string[];
  excluded: string[];
  guesses_used: number;
  max_guesses: number;
  steps_used: number;
  max_steps: number;
  pending: { kind: "question" | "guess"; text: string } | null;
  transcript: TranscriptEntry[];
  decisions: Decision[];
}

export interface AnswerResponse {
  agent_slot_decision: Intent | null;
  candidates_count: number;
  state: SessionView;
}

export interface HypothesisRow {
  qid: number;
  label: string;
  value: Intent | "—";
}

// One row per slot. A row counts as filled once a tracker decision has
// touched it (the decisions log carries the qid); untouched slots render
// as an em dash even though the server encodes them as "unknown".
export function hypothesisRows(view: SessionView): HypothesisRow[] {
  const asked = new Map<number, string>();
  for (const d of view.decisions) {
    asked.set(d.qid, d.question);
  }
  return view.hypothesis.map((value, qid) => ({
    qid,
    label: asked.get(qid) ?? `Question ${qid + 1}`,
    value: asked.has(qid) ? value : "—",
  }));
}

export function filledCount(view: SessionView): number {
  return new Set(view.decisions.map((d) => d.qid)).size;
}

export function progressLine(view: SessionView): string {
  return (
    `${view.steps_used}/${view.max_steps} steps · ` +
    `${view.guesses_used}/${view.max_guesses} guesses · ` +
    `${view.candidates_count} candidate${view.candidates_count === 1 ? "" : "s"}`
  );
}

export function outcomeBanner(view: SessionView): string | null {
  if (view.outcome === "win") {
    return `The agent got it in ${view.steps_used} steps with ` +
      `${view.guesses_used} guess${view.guesses_used === 1 ? "" : "es"}.`;
  }
  if (view.outcome === "loss") {
    return "The agent gives up — you win this one.";
  }
  return null;
}

export function transcriptLines(view: SessionView): string[] {
  return view.transcript.map((e) =>
    e.role === "sys" ? `Agent: ${e.text}` : `You: ${e.text}`,
  );
}
