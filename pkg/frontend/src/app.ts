import { ApiClient, ApiError } from "./api.js";
import {
  renderComments,
  renderDetails,
  renderSolutions,
  renderTree,
} from "./render.js";
import {
  clampLevel,
  clampRank,
  coerceConfidence,
  coerceFpMode,
  initialState,
  viewParams,
} from "./state.js";
import type { Tab, ViewState } from "./state.js";
import type {
  EstimateDoc,
  TriageDoc,
  ViewDoc,
  ViewEntryDoc,
  VoteDirection,
} from "./types.js";

export interface InteractionEvent {
  at: number;
  kind: string;
  detail: string;
}

export interface FixPrompt {
  fingerprint: string;
  patternId: string;
  filePath: string;
  prefillMinutes: number;
}

export interface AppOptions {
  api: ApiClient;
  root: HTMLElement;
  projectId?: string;
  pollIntervalMs?: number;
  now?: () => number;
}

const TABS: Tab[] = ["DETAILS", "COMMENTS", "SOLUTIONS"];

/**
 * The triage cockpit. Owns a ViewState, mirrors the server through the
 * ApiClient, and performs no triage computation of its own: every
 * ordering and filtering decision on screen is the /view response
 * verbatim.
 */
export class App {
  readonly state: ViewState;
  view: ViewDoc | null = null;
  prompts: FixPrompt[] = [];
  // Interaction trace; raw material for studying how the surface is used.
  readonly events: InteractionEvent[] = [];

  private readonly api: ApiClient;
  private readonly root: HTMLElement;
  private readonly pollIntervalMs: number;
  private readonly now: () => number;
  private readonly estimates = new Map<string, EstimateDoc>();
  private pollHandle: ReturnType<typeof setInterval> | null = null;
  private lastUploadAt: number | null = null;

  private bannerEl!: HTMLElement;
  private controlsEl!: HTMLElement;
  private treeEl!: HTMLElement;
  private tabBarEl!: HTMLElement;
  private tabBodyEl!: HTMLElement;
  private promptEl!: HTMLElement;

  constructor(options: AppOptions) {
    this.api = options.api;
    this.root = options.root;
    this.pollIntervalMs = options.pollIntervalMs ?? 10_000;
    this.now = options.now ?? (() => Date.now());
    this.state = initialState(options.projectId ?? "default");
    this.buildSkeleton();
  }

  async start(): Promise<void> {
    await this.refresh();
    this.pollHandle = setInterval(() => {
      void this.poll();
    }, this.pollIntervalMs);
  }

  stop(): void {
    if (this.pollHandle !== null) {
      clearInterval(this.pollHandle);
      this.pollHandle = null;
    }
  }

  // -- view -----------------------------------------------------------

  /** Fetch the view once and re-render. The single source of ordering. */
  async refresh(): Promise<void> {
    let view: ViewDoc;
    try {
      view = await this.api.getView(this.state.projectId, viewParams(this.state));
    } catch (error) {
      this.fail(error);
      return;
    }
    this.clearBanner();
    this.view = view;
    await this.loadEstimates(view);
    renderTree(this.treeEl, view, this.estimates, {
      onSelect: (fingerprint) => {
        void this.selectFinding(fingerprint);
      },
    });
    if (this.state.selected && !this.entryFor(this.state.selected)) {
      this.state.selected = null;
    }
    await this.renderTabBody();
  }

  private async loadEstimates(view: ViewDoc): Promise<void> {
    const wanted = new Set(view.entries.map((e) => e.finding.patternId));
    for (const patternId of wanted) {
      try {
        this.estimates.set(patternId, await this.api.getEstimate(patternId));
      } catch {
        this.estimates.delete(patternId); // no badge is better than a stale one
      }
    }
  }

  private async poll(): Promise<void> {
    // refresh() re-renders the open tab too, so one poll re-pulls both
    // the view and whatever shared knowledge is on screen.
    await this.refresh();
  }

  // -- controls ---------------------------------------------------------

  async setLevel(raw: number): Promise<void> {
    this.state.level = clampLevel(raw, this.state.level);
    this.log("control", `level=${this.state.level}`);
    await this.refresh();
  }

  async setMinConfidence(raw: string): Promise<void> {
    this.state.minConfidence = coerceConfidence(raw, this.state.minConfidence);
    this.log("control", `minConfidence=${this.state.minConfidence}`);
    await this.refresh();
  }

  async setMaxRank(raw: number): Promise<void> {
    this.state.maxRank = clampRank(raw, this.state.maxRank);
    this.log("control", `maxRank=${this.state.maxRank}`);
    await this.refresh();
  }

  async setFpMode(raw: string): Promise<void> {
    this.state.fpMode = coerceFpMode(raw, this.state.fpMode);
    this.log("control", `fpMode=${this.state.fpMode}`);
    await this.refresh();
  }

  // -- triage edits -----------------------------------------------------

  async markFalsePositive(fingerprint: string): Promise<void> {
    this.log("mark-fp", fingerprint);
    const stamp = new Date(this.now()).toISOString();
    const ok = await this.editTriage((triage) => {
      triage.falsePositives[fingerprint] = stamp;
    });
    if (ok) {
      // Fade now; the row disappears on the next fetch at level >= 1.
      const row = this.rowFor(fingerprint);
      if (row) {
        row.classList.add("fp-fading");
        row.style.opacity = "0.5";
      }
    }
  }

  async overrideSeverity(fingerprint: string, rawRank: number): Promise<void> {
    const rank = clampRank(rawRank, 1);
    this.log("override", `${fingerprint}=${rank}`);
    await this.editTriage((triage) => {
      triage.severityOverrides[fingerprint] = rank;
    });
  }

  /**
   * Read-modify-write on the triage document. A concurrent editor makes
   * the PUT 409; retry once on fresh state, then surface the conflict.
   */
  private async editTriage(edit: (triage: TriageDoc) => void): Promise<boolean> {
    try {
      const triage = await this.api.getTriage(this.state.projectId);
      edit(triage);
      try {
        await this.api.putTriage(this.state.projectId, triage);
      } catch (error) {
        if (!(error instanceof ApiError) || error.status !== 409) throw error;
        const fresh = await this.api.getTriage(this.state.projectId);
        edit(fresh);
        await this.api.putTriage(this.state.projectId, fresh);
      }
      this.clearBanner();
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    }
  }

  // -- selection and tabs -------------------------------------------------

  async selectFinding(fingerprint: string): Promise<void> {
    this.state.selected = fingerprint;
    this.log("select", fingerprint);
    await this.renderTabBody();
  }

  async setTab(tab: Tab): Promise<void> {
    this.state.tab = tab;
    this.log("tab", tab);
    for (const button of this.tabBarEl.querySelectorAll("button")) {
      button.classList.toggle("active", button.dataset.tab === tab);
    }
    await this.renderTabBody();
  }

  private entryFor(fingerprint: string): ViewEntryDoc | null {
    const entry = this.view?.entries.find((e) => e.finding.fingerprint === fingerprint);
    return entry ?? null;
  }

  private rowFor(fingerprint: string): HTMLElement | null {
    return this.treeEl.querySelector(`[data-fingerprint="${fingerprint}"]`);
  }

  private async renderTabBody(): Promise<void> {
    const entry = this.state.selected ? this.entryFor(this.state.selected) : null;
    if (this.state.tab === "DETAILS") {
      renderDetails(this.tabBodyEl, entry);
      if (entry) this.appendTriageControls(entry);
      return;
    }
    if (!entry) {
      renderDetails(this.tabBodyEl, null);
      return;
    }
    if (this.state.tab === "COMMENTS") {
      await this.renderCommentsTab(entry.finding.patternId, entry.finding.fingerprint);
    } else {
      await this.renderSolutionsTab(entry.finding.patternId);
    }
  }

  private appendTriageControls(entry: ViewEntryDoc): void {
    const actions = document.createElement("div");
    actions.className = "detail-actions";

    const markButton = document.createElement("button");
    markButton.className = "mark-fp";
    markButton.textContent = "Mark false positive";
    markButton.addEventListener("click", () => {
      void this.markFalsePositive(entry.finding.fingerprint);
    });
    actions.appendChild(markButton);

    const rankInput = document.createElement("input");
    rankInput.className = "override-rank";
    rankInput.type = "number";
    rankInput.min = "1";
    rankInput.max = "20";
    rankInput.value = String(entry.finding.severity);
    actions.appendChild(rankInput);

    const rankButton = document.createElement("button");
    rankButton.className = "apply-override";
    rankButton.textContent = "Set severity";
    rankButton.addEventListener("click", () => {
      void this.overrideSeverity(entry.finding.fingerprint, Number(rankInput.value));
    });
    actions.appendChild(rankButton);

    this.tabBodyEl.appendChild(actions);
  }

  private async renderCommentsTab(patternId: string, fingerprint: string): Promise<void> {
    let comments;
    try {
      comments = await this.api.getComments(patternId);
    } catch (error) {
      this.fail(error);
      return;
    }
    renderComments(this.tabBodyEl, comments);

    const form = document.createElement("div");
    form.className = "comment-form";
    const input = document.createElement("textarea");
    input.className = "comment-input";
    const author = document.createElement("input");
    author.className = "comment-author";
    author.placeholder = "author (optional)";
    const error = document.createElement("span");
    error.className = "inline-error";
    const submit = document.createElement("button");
    submit.className = "comment-submit";
    submit.textContent = "Add comment";
    submit.addEventListener("click", () => {
      void this.submitComment(patternId, fingerprint, input.value, author.value, error);
    });
    form.appendChild(input);
    form.appendChild(author);
    form.appendChild(submit);
    form.appendChild(error);
    this.tabBodyEl.appendChild(form);
  }

  async submitComment(
    patternId: string,
    fingerprint: string,
    text: string,
    author: string,
    errorEl: HTMLElement,
  ): Promise<void> {
    if (text.trim() === "") {
      // The server would reject it anyway; skip the round trip.
      errorEl.textContent = "Comment text must not be empty.";
      return;
    }
    errorEl.textContent = "";
    this.log("comment", patternId);
    try {
      await this.api.postComment(patternId, text, author.trim() || undefined, fingerprint);
    } catch (error) {
      this.fail(error);
      return;
    }
    await this.renderTabBody();
  }

  private async renderSolutionsTab(patternId: string): Promise<void> {
    let solutions;
    try {
      solutions = await this.api.getSolutions(patternId);
    } catch (error) {
      this.fail(error);
      return;
    }
    renderSolutions(this.tabBodyEl, solutions, {
      onVote: (solutionId, direction) => {
        void this.castVote(solutionId, direction);
      },
    });
  }

  async castVote(solutionId: string, direction: VoteDirection): Promise<void> {
    this.log("vote", `${solutionId}:${direction}`);
    let updated;
    try {
      updated = await this.api.vote(solutionId, direction);
    } catch (error) {
      this.fail(error);
      return;
    }
    // Counters come from the response; never incremented optimistically.
    const item = this.tabBodyEl.querySelector(`[data-solution-id="${solutionId}"]`);
    const counts = item?.querySelector(".vote-counts");
    if (counts) {
      counts.textContent = `+${updated.upVotes} / -${updated.downVotes}`;
    }
  }

  // -- run upload and fix-time prompts ---------------------------------------

  /**
   * Upload a canonical run document. Resolved findings are computed from
   * the raw (level 0) views before and after the upload: set difference
   * only, no ordering or filtering decisions on the client.
   */
  async uploadRun(runDoc: unknown): Promise<void> {
    this.log("upload", "run");
    try {
      const before = await this.api.getView(this.state.projectId, {
        level: 0,
        minConfidence: "LOW",
        maxRank: 20,
        fpMode: this.state.fpMode,
      });
      await this.api.postRun(this.state.projectId, runDoc);
      const after = await this.api.getView(this.state.projectId, {
        level: 0,
        minConfidence: "LOW",
        maxRank: 20,
        fpMode: this.state.fpMode,
      });
      const remaining = new Set(after.entries.map((e) => e.finding.fingerprint));
      const elapsedMinutes =
        this.lastUploadAt !== null
          ? Math.max(1, Math.round((this.now() - this.lastUploadAt) / 60_000))
          : 15;
      this.lastUploadAt = this.now();
      this.prompts = before.entries
        .filter((e) => !remaining.has(e.finding.fingerprint))
        .map((e) => ({
          fingerprint: e.finding.fingerprint,
          patternId: e.finding.patternId,
          filePath: e.finding.location.filePath,
          prefillMinutes: elapsedMinutes,
        }));
      this.renderPrompts();
      await this.refresh();
    } catch (error) {
      this.fail(error);
    }
  }

  dismissPrompt(fingerprint: string): void {
    this.prompts = this.prompts.filter((p) => p.fingerprint !== fingerprint);
    this.log("dismiss-prompt", fingerprint);
    this.renderPrompts();
  }

  dismissAllPrompts(): void {
    this.prompts = [];
    this.log("dismiss-prompt", "all");
    this.renderPrompts();
  }

  async submitFixTime(fingerprint: string, minutes: number): Promise<void> {
    const prompt = this.prompts.find((p) => p.fingerprint === fingerprint);
    if (!prompt || !(minutes > 0)) return;
    this.log("fixtime", `${prompt.patternId}:${minutes}`);
    try {
      await this.api.recordFix(prompt.patternId, minutes);
    } catch (error) {
      this.fail(error);
      return;
    }
    this.dismissPrompt(fingerprint);
  }

  private renderPrompts(): void {
    this.promptEl.textContent = "";
    if (this.prompts.length === 0) {
      this.promptEl.classList.add("hidden");
      return;
    }
    this.promptEl.classList.remove("hidden");

    const heading = document.createElement("div");
    heading.className = "prompt-heading";
    heading.textContent = "Resolved since the last run — how long did the fix take?";
    const dismissAll = document.createElement("button");
    dismissAll.className = "dismiss-all";
    dismissAll.textContent = "Dismiss all";
    dismissAll.addEventListener("click", () => this.dismissAllPrompts());
    heading.appendChild(dismissAll);
    this.promptEl.appendChild(heading);

    for (const prompt of this.prompts) {
      const row = document.createElement("div");
      row.className = "prompt-row";
      row.dataset.fingerprint = prompt.fingerprint;

      const label = document.createElement("span");
      label.textContent = `${prompt.patternId} · ${prompt.filePath}`;
      row.appendChild(label);

      const minutes = document.createElement("input");
      minutes.type = "number";
      minutes.min = "1";
      minutes.className = "prompt-minutes";
      minutes.value = String(prompt.prefillMinutes);
      row.appendChild(minutes);

      const submit = document.createElement("button");
      submit.className = "prompt-submit";
      submit.textContent = "Record";
      submit.addEventListener("click", () => {
        void this.submitFixTime(prompt.fingerprint, Number(minutes.value));
      });
      row.appendChild(submit);

      const dismiss = document.createElement("button");
      dismiss.className = "prompt-dismiss";
      dismiss.textContent = "Dismiss";
      dismiss.addEventListener("click", () => this.dismissPrompt(prompt.fingerprint));
      row.appendChild(dismiss);

      this.promptEl.appendChild(row);
    }
  }

  // -- chrome -----------------------------------------------------------

  private fail(error: unknown): void {
    const message =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : "Server unreachable.";
    this.bannerEl.textContent = message;
    this.bannerEl.classList.remove("hidden");
    this.setControlsDisabled(true);
  }

  private clearBanner(): void {
    this.bannerEl.textContent = "";
    this.bannerEl.classList.add("hidden");
    this.setControlsDisabled(false);
  }

  private setControlsDisabled(disabled: boolean): void {
    for (const el of this.controlsEl.querySelectorAll("input, select, button")) {
      (el as HTMLInputElement).disabled = disabled;
    }
  }

  private log(kind: string, detail: string): void {
    this.events.push({ at: this.now(), kind, detail });
  }

  private buildSkeleton(): void {
    this.root.textContent = "";

    this.bannerEl = document.createElement("div");
    this.bannerEl.className = "banner hidden";
    this.root.appendChild(this.bannerEl);

    this.controlsEl = document.createElement("div");
    this.controlsEl.className = "controls";
    this.controlsEl.appendChild(
      this.rangeControl("level", 0, 6, this.state.level, (v) => this.setLevel(v)),
    );
    this.controlsEl.appendChild(
      this.selectControl(
        "minConfidence",
        ["HIGH", "NORMAL", "LOW"],
        this.state.minConfidence,
        (v) => this.setMinConfidence(v),
      ),
    );
    this.controlsEl.appendChild(
      this.rangeControl("maxRank", 1, 20, this.state.maxRank, (v) => this.setMaxRank(v)),
    );
    this.controlsEl.appendChild(
      this.selectControl("fpMode", ["HIGHLIGHT", "DIM"], this.state.fpMode, (v) =>
        this.setFpMode(v),
      ),
    );
    this.root.appendChild(this.controlsEl);

    this.promptEl = document.createElement("div");
    this.promptEl.className = "prompt-area hidden";
    this.root.appendChild(this.promptEl);

    const main = document.createElement("div");
    main.className = "main";

    this.treeEl = document.createElement("div");
    this.treeEl.className = "tree";
    main.appendChild(this.treeEl);

    const panel = document.createElement("div");
    panel.className = "panel";
    this.tabBarEl = document.createElement("div");
    this.tabBarEl.className = "tab-bar";
    for (const tab of TABS) {
      const button = document.createElement("button");
      button.dataset.tab = tab;
      button.textContent = tab.charAt(0) + tab.slice(1).toLowerCase();
      button.classList.toggle("active", tab === this.state.tab);
      button.addEventListener("click", () => this.setTab(tab));
      this.tabBarEl.appendChild(button);
    }
    panel.appendChild(this.tabBarEl);

    this.tabBodyEl = document.createElement("div");
    this.tabBodyEl.className = "tab-body";
    panel.appendChild(this.tabBodyEl);
    main.appendChild(panel);

    this.root.appendChild(main);
    renderDetails(this.tabBodyEl, null);
  }

  private rangeControl(
    name: string,
    min: number,
    max: number,
    value: number,
    onChange: (value: number) => Promise<void>,
  ): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = `control control-${name}`;
    wrap.textContent = name;
    const input = document.createElement("input");
    input.type = "range";
    input.name = name;
    input.min = String(min);
    input.max = String(max);
    input.value = String(value);
    input.addEventListener("change", () => {
      void onChange(Number(input.value));
    });
    wrap.appendChild(input);
    return wrap;
  }

  private selectControl(
    name: string,
    values: string[],
    value: string,
    onChange: (value: string) => Promise<void>,
  ): HTMLElement {
    const wrap = document.createElement("label");
    wrap.className = `control control-${name}`;
    wrap.textContent = name;
    const select = document.createElement("select");
    select.name = name;
    for (const option of values) {
      const el = document.createElement("option");
      el.value = option;
      el.textContent = option;
      el.selected = option === value;
      select.appendChild(el);
    }
    select.addEventListener("change", () => {
      void onChange(select.value);
    });
    wrap.appendChild(select);
    return wrap;
  }
}
