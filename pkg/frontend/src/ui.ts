// DOM layer: builds the page, wires events, and re-renders after every
// server response. The controller methods return the in-flight promise so
// scripted tests can click a button and await `app.settled`.

import { ApiError, type Api } from "./api.js";
import {
  hypothesisRows,
  outcomeBanner,
  progressLine,
  transcriptLines,
  type Persona,
  type SessionView,
} from "./state.js";

export interface App {
  newGame(): Promise<void>;
  submitAnswer(): Promise<void>;
  adjudicate(verdict: "correct" | "wrong"): Promise<void>;
  view(): SessionView | null;
  settled: Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountApp(root: HTMLElement, api: Api): App {
  let sessionId: string | null = null;
  let roster: Persona[] = [];
  let current: SessionView | null = null;
  let busy = false;

  root.innerHTML = "";
  const header = el("header");
  const title = el("h1", "", "20 Questions");
  const newBtn = el("button", "new-game", "New game");
  header.append(title, newBtn);

  const layout = el("div", "layout");

  const rosterPanel = el("details", "roster");
  rosterPanel.open = true;
  rosterPanel.append(el("summary", "", "Personas"));
  const rosterHint = el("p", "hint",
    "Pick one of these in your head, then start a game.");
  const rosterList = el("ul", "roster-list");
  rosterPanel.append(rosterHint, rosterList);

  const main = el("main");
  const banner = el("div", "banner hidden");
  const progress = el("div", "progress", "No game yet.");
  const transcript = el("div", "transcript");
  const interaction = el("div", "interaction");
  main.append(banner, progress, transcript, interaction);

  const hypothesisPanel = el("aside", "hypothesis");
  hypothesisPanel.append(el("h2", "", "Hypothesis"));
  const hypothesisCount = el("div", "hyp-count");
  const hypothesisTable = el("table", "hyp-table");
  hypothesisPanel.append(hypothesisCount, hypothesisTable);

  layout.append(rosterPanel, main, hypothesisPanel);
  const toast = el("div", "toast hidden");
  root.append(header, layout, toast);

  let toastTimer: ReturnType<typeof setTimeout> | undefined;
  function showToast(message: string): void {
    toast.textContent = message;
    toast.classList.remove("hidden");
    clearTimeout(toastTimer);
    toastTimer = setTimeout(() => toast.classList.add("hidden"), 4000);
  }

  function renderRoster(): void {
    rosterList.innerHTML = "";
    for (const p of roster) {
      rosterList.append(el("li", "persona", p.name));
    }
  }

  function renderView(): void {
    if (!current) return;
    const text = outcomeBanner(current);
    banner.textContent = text ?? "";
    banner.classList.toggle("hidden", text === null);
    banner.classList.toggle("win", current.outcome === "win");
    progress.textContent = progressLine(current);

    transcript.innerHTML = "";
    for (const line of transcriptLines(current)) {
      const row = el("div", "line", line);
      row.classList.add(line.startsWith("Agent:") ? "sys" : "user");
      transcript.append(row);
    }

    hypothesisCount.textContent =
      `${current.candidates_count} candidates consistent`;
    hypothesisTable.innerHTML = "";
    for (const row of hypothesisRows(current)) {
      const tr = el("tr", row.value === "—" ? "unfilled" : "filled");
      tr.append(el("td", "q", row.label), el("td", "v", row.value));
      hypothesisTable.append(tr);
    }

    renderInteraction();
  }

  function renderInteraction(): void {
    interaction.innerHTML = "";
    if (!current || current.outcome !== null) return;
    const pending = current.pending;
    if (!pending) {
      interaction.append(el("div", "waiting", "Agent is thinking…"));
      return;
    }
    if (pending.kind === "question") {
      const form = el("form", "answer-form");
      const input = el("input", "answer-input");
      input.placeholder = "Answer in your own words…";
      input.autofocus = true;
      const send = el("button", "send", "Send");
      send.type = "submit";
      form.append(input, send);
      form.addEventListener("submit", (ev) => {
        ev.preventDefault();
        void run(submitAnswer);
      });
      interaction.append(form);
    } else {
      const controls = el("div", "verdict");
      const right = el("button", "correct", "Correct");
      const wrong = el("button", "wrong", "Wrong");
      right.addEventListener("click", () =>
        void run(() => adjudicate("correct")));
      wrong.addEventListener("click", () =>
        void run(() => adjudicate("wrong")));
      controls.append(right, wrong);
      interaction.append(controls);
    }
  }

  async function refresh(): Promise<void> {
    if (!sessionId) return;
    current = await api.getState(sessionId);
    renderView();
  }

  async function advance(): Promise<void> {
    // ask the agent for its next move, then re-render from the
    // authoritative state view
    if (!sessionId || (current && current.outcome !== null)) return;
    await api.nextMove(sessionId);
    await refresh();
  }

  async function newGame(): Promise<void> {
    if (sessionId) {
      await api.deleteSession(sessionId).catch(() => undefined);
      sessionId = null;
    }
    const created = await api.createSession();
    sessionId = created.session_id;
    roster = created.persona_roster;
    renderRoster();
    current = null;
    await advance();
  }

  async function submitAnswer(): Promise<void> {
    if (!sessionId) return;
    const input = interaction.querySelector<HTMLInputElement>(".answer-input");
    const text = input ? input.value.trim() : "";
    const res = await api.postAnswer(sessionId, { text });
    current = res.state;
    renderView();
    if (current.outcome === null) {
      await advance();
    }
  }

  async function adjudicate(verdict: "correct" | "wrong"): Promise<void> {
    if (!sessionId) return;
    const res = await api.postAnswer(sessionId, { verdict });
    current = res.state;
    renderView();
    if (current.outcome === null) {
      await advance();
    }
  }

  let settled: Promise<void> = Promise.resolve();

  function setControlsDisabled(disabled: boolean): void {
    for (const node of interaction.querySelectorAll("input, button")) {
      (node as HTMLInputElement | HTMLButtonElement).disabled = disabled;
    }
  }

  function run(action: () => Promise<void>): Promise<void> {
    if (busy) return settled;
    busy = true;
    newBtn.disabled = true;
    setControlsDisabled(true);
    settled = action()
      .catch((err) => {
        // surface the failure without touching rendered state
        showToast(err instanceof ApiError ? err.message : String(err));
        setControlsDisabled(false);
      })
      .finally(() => {
        busy = false;
        newBtn.disabled = false;
      });
    return settled;
  }

  newBtn.addEventListener("click", () => void run(newGame));

  return {
    newGame: () => run(newGame),
    submitAnswer: () => run(submitAnswer),
    adjudicate: (verdict) => run(() => adjudicate(verdict)),
    view: () => current,
    get settled() {
      return settled;
    },
  };
}
