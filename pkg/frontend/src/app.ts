// Single-page client for the hearing-test record service.
// Views: login, exam editor (tab per test), search, and live metrics/charts.

import { ApiClient, ApiError, ChartKind } from "./api.js";
import {
  buildCaloricRecord,
  buildPatientRecord,
  buildPureToneRecord,
  buildSpeechRecord,
  CATEGORY_LABELS,
  examKey,
  fmt1,
  isIsoDate,
  parseTympanogramSamples,
  thresholdsToText,
} from "./forms.js";

const api = new ApiClient();

const PURE_TONE_CATEGORIES = [
  "ac_masked",
  "ac_unmasked",
  "bc_masked",
  "bc_unmasked",
  "ac_aided",
  "loudness_level",
  "sound_field",
];

interface AppState {
  patientId: string;
  examDate: string;
  tab: string;
  pureToneCategory: string;
}

const state: AppState = {
  patientId: "",
  examDate: "",
  tab: "patient",
  pureToneCategory: "ac_unmasked",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function root(): HTMLElement {
  return document.getElementById("app")!;
}

function flash(message: string, kind: "error" | "ok" = "error") {
  const box = document.getElementById("flash")!;
  box.textContent = message;
  box.className = kind;
  if (message) setTimeout(() => (box.textContent = ""), 6000);
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.body.code}: ${err.body.message}`;
  return String(err instanceof Error ? err.message : err);
}

// ---------------------------------------------------------------------------
// Login view
// ---------------------------------------------------------------------------

function renderLogin() {
  const user = el("input", { id: "username", placeholder: "username" });
  const pass = el("input", { id: "password", type: "password", placeholder: "password" });
  const submit = async (register: boolean) => {
    try {
      if (register) await api.register(user.value, pass.value);
      else await api.login(user.value, pass.value);
      renderWorkspace();
    } catch (err) {
      flash(describe(err));
    }
  };
  const loginBtn = el("button", {}, "Log in");
  loginBtn.onclick = () => void submit(false);
  const registerBtn = el("button", { class: "secondary" }, "Register");
  registerBtn.onclick = () => void submit(true);
  root().replaceChildren(
    el("div", { class: "login" },
      el("h1", {}, "Hearing Test Records"),
      user, pass,
      el("div", { class: "row" }, loginBtn, registerBtn)),
  );
}

// ---------------------------------------------------------------------------
// Workspace: exam selector + tabs
// ---------------------------------------------------------------------------

function renderWorkspace() {
  const pid = el("input", { id: "patient-id", placeholder: "patient id" });
  pid.value = state.patientId;
  const date = el("input", { id: "exam-date", placeholder: "YYYY-MM-DD" });
  date.value = state.examDate;
  const open = el("button", {}, "Open exam");
  open.onclick = () => {
    if (!pid.value.trim()) return flash("patient id is required");
    if (!isIsoDate(date.value)) return flash("exam date must be YYYY-MM-DD");
    state.patientId = pid.value.trim();
    state.examDate = date.value;
    void renderTabs();
  };
  const searchBtn = el("button", { class: "secondary" }, "Search…");
  searchBtn.onclick = () => void renderSearch();
  const logout = el("button", { class: "secondary" }, "Log out");
  logout.onclick = () => {
    api.logout();
    renderLogin();
  };
  root().replaceChildren(
    el("header", {}, pid, date, open, searchBtn, logout),
    el("nav", { id: "tabs" }),
    el("main", { id: "tab-body" }),
    el("aside", { id: "metrics" }),
  );
  if (state.patientId && state.examDate) void renderTabs();
}

const TABS: [string, string][] = [
  ["patient", "Patient"],
  ["pure_tone", "Pure-Tone"],
  ["speech", "Speech"],
  ["impedance", "Impedance"],
  ["caloric", "Bithermal Caloric"],
  ["report", "Report"],
];

async function renderTabs() {
  const nav = document.getElementById("tabs")!;
  nav.replaceChildren(
    ...TABS.map(([id, label]) => {
      const b = el("button", { class: id === state.tab ? "tab active" : "tab" }, label);
      b.onclick = () => {
        state.tab = id;
        void renderTabs();
      };
      return b;
    }),
  );
  const body = document.getElementById("tab-body")!;
  body.replaceChildren(el("p", {}, "Loading…"));
  try {
    switch (state.tab) {
      case "patient": await renderPatientTab(body); break;
      case "pure_tone": await renderPureToneTab(body); break;
      case "speech": await renderSpeechTab(body); break;
      case "impedance": await renderImpedanceTab(body); break;
      case "caloric": await renderCaloricTab(body); break;
      case "report": renderReportTab(body); break;
    }
  } catch (err) {
    body.replaceChildren(el("p", { class: "error" }, describe(err)));
  }
  void refreshMetrics();
}

async function loadRecord(category: string): Promise<Record<string, unknown> | null> {
  try {
    return await api.getRecord(state.patientId, state.examDate, category as never);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) return null;
    throw err;
  }
}

async function save(category: string, record: Record<string, unknown>) {
  try {
    await api.putRecord(state.patientId, state.examDate, category as never, record);
    flash(`${CATEGORY_LABELS[category]} saved`, "ok");
    await renderTabs();
  } catch (err) {
    flash(describe(err));
  }
}

async function showChart(container: HTMLElement, kind: ChartKind, categories?: string[]) {
  try {
    const svg = await api.fetchChart(state.patientId, state.examDate, kind, { categories });
    container.innerHTML = svg;
  } catch (err) {
    container.replaceChildren(el("p", { class: "muted" }, describe(err)));
  }
}

// ---------------------------------------------------------------------------
// Tabs
// ---------------------------------------------------------------------------

async function renderPatientTab(body: HTMLElement) {
  const existing = (await loadRecord("patient")) ?? {};
  const field = (name: string, value: unknown) => {
    const input = el("input", { id: `pt-${name}`, placeholder: name.replace("_", " ") });
    input.value = value === undefined || value === null ? "" : String(value);
    return input;
  };
  const name = field("name", existing.name);
  const age = field("age", existing.age);
  const sex = el("select", { id: "pt-sex" },
    ...["male", "female", "other"].map((s) =>
      el("option", s === existing.sex ? { selected: "" } : {}, s)));
  const contact = field("contact", existing.contact);
  const symptoms = field("symptoms", existing.symptoms);
  const diagnosis = field("diagnosis", existing.diagnosis);
  const prescriptions = field("prescriptions", existing.prescriptions);
  const saveBtn = el("button", {}, "Save patient");
  saveBtn.onclick = () => {
    try {
      void save("patient", buildPatientRecord(examKey(state.patientId, state.examDate), {
        name: name.value,
        age: age.value,
        sex: (sex as HTMLSelectElement).value,
        contact: contact.value,
        symptoms: symptoms.value,
        diagnosis: diagnosis.value,
        prescriptions: prescriptions.value,
      }));
    } catch (err) {
      flash(describe(err));
    }
  };
  const del = el("button", { class: "danger" }, "Delete entire exam…");
  del.onclick = async () => {
    if (!window.confirm(`Delete every record for ${state.patientId} on ${state.examDate}?`)) return;
    const { rows_removed } = await api.deleteExam(state.patientId, state.examDate);
    flash(`removed ${rows_removed} rows`, "ok");
    await renderTabs();
  };
  body.replaceChildren(
    el("h2", {}, "Patient"),
    name, age, sex, contact, symptoms, diagnosis, prescriptions,
    el("div", { class: "row" }, saveBtn, del),
  );
}

async function renderPureToneTab(body: HTMLElement) {
  const sub = el("div", { class: "subtabs" },
    ...PURE_TONE_CATEGORIES.map((cat) => {
      const b = el("button",
        { class: cat === state.pureToneCategory ? "tab active" : "tab" },
        CATEGORY_LABELS[cat]);
      b.onclick = () => {
        state.pureToneCategory = cat;
        void renderTabs();
      };
      return b;
    }));
  const cat = state.pureToneCategory;
  const existing = (await loadRecord(cat)) as
    | { right: Record<string, number> | null; left: Record<string, number> | null }
    | null;
  const right = el("input", { id: "pt-right", placeholder: "right, e.g. 500:30 1000:40" });
  right.value = thresholdsToText(existing?.right ?? null);
  const left = el("input", { id: "pt-left", placeholder: "left, e.g. 500:25 1000:25" });
  left.value = thresholdsToText(existing?.left ?? null);
  const saveBtn = el("button", {}, `Save ${CATEGORY_LABELS[cat]}`);
  saveBtn.onclick = () => {
    try {
      void save(cat, buildPureToneRecord(
        examKey(state.patientId, state.examDate), cat, right.value, left.value));
    } catch (err) {
      flash(describe(err));
    }
  };
  const chart = el("div", { id: "chart", class: "chart" });
  body.replaceChildren(el("h2", {}, "Pure-Tone Audiometry"), sub, right, left, saveBtn, chart);
  await showChart(chart, "audiogram");
}

async function renderSpeechTab(body: HTMLElement) {
  const existing = (await loadRecord("speech")) as Record<string, {
    trials: [number, number][];
    sd_score: number | null;
    sd_intensity: number | null;
  } | null> | null;
  const ear = el("select", { id: "sp-ear" },
    el("option", {}, "right"), el("option", {}, "left"));
  const trials = el("textarea", {
    id: "sp-trials",
    placeholder: "one trial per line: intensity percent, e.g. 30 55",
    rows: "6",
  });
  const sdScore = el("input", { id: "sp-sd-score", placeholder: "SD score %" });
  const sdIntensity = el("input", { id: "sp-sd-int", placeholder: "SD intensity dB" });
  const fill = () => {
    const rec = existing?.[(ear as HTMLSelectElement).value];
    trials.value = rec ? rec.trials.map(([i, p]) => `${i} ${p}`).join("\n") : "";
    sdScore.value = rec?.sd_score == null ? "" : String(rec.sd_score);
    sdIntensity.value = rec?.sd_intensity == null ? "" : String(rec.sd_intensity);
  };
  ear.onchange = fill;
  fill();
  const saveBtn = el("button", {}, "Save speech record");
  saveBtn.onclick = () => {
    try {
      void save("speech", buildSpeechRecord(
        examKey(state.patientId, state.examDate),
        (ear as HTMLSelectElement).value, trials.value, sdScore.value, sdIntensity.value));
    } catch (err) {
      flash(describe(err));
    }
  };
  const chart = el("div", { id: "chart", class: "chart" });
  body.replaceChildren(el("h2", {}, "Speech Audiometry"), ear, trials, sdScore, sdIntensity, saveBtn, chart);
  await showChart(chart, "speech");
}

async function renderImpedanceTab(body: HTMLElement) {
  const existing = (await loadRecord("impedance")) as Record<string, {
    samples: [number, number][];
  } | null> | null;
  const ear = el("select", { id: "imp-ear" },
    el("option", {}, "right"), el("option", {}, "left"));
  const samples = el("textarea", {
    id: "imp-samples",
    placeholder: "one sample per line: pressure compliance, e.g. -100 1.5",
    rows: "6",
  });
  const fill = () => {
    const rec = existing?.[(ear as HTMLSelectElement).value];
    samples.value = rec ? rec.samples.map(([p, c]) => `${p} ${c}`).join("\n") : "";
  };
  ear.onchange = fill;
  fill();
  const saveBtn = el("button", {}, "Save tympanogram");
  saveBtn.onclick = () => {
    try {
      void save("impedance", {
        key: examKey(state.patientId, state.examDate),
        ear: (ear as HTMLSelectElement).value,
        samples: parseTympanogramSamples(samples.value),
        reflexes: [],
      });
    } catch (err) {
      flash(describe(err));
    }
  };
  const chart = el("div", { id: "chart", class: "chart" });
  body.replaceChildren(el("h2", {}, "Impedance Audiometry"), ear, samples, saveBtn, chart);
  await showChart(chart, "tympanogram");
}

async function renderCaloricTab(body: HTMLElement) {
  const existing = (await loadRecord("caloric")) as {
    entries: { ear: string; temperature: string; nystagmus_start: number; nystagmus_end: number }[];
  } | null;
  const rows: [string, string][] = [
    ["right", "44C"], ["right", "30C"], ["left", "44C"], ["left", "30C"],
  ];
  const inputs = new Map<string, [HTMLInputElement, HTMLInputElement]>();
  const table = el("table", {},
    el("tr", {}, el("th", {}, "Ear / stimulus"), el("th", {}, "Onset (s)"), el("th", {}, "End (s)")),
    ...rows.map(([ear, temp]) => {
      const prior = existing?.entries.find((e) => e.ear === ear && e.temperature === temp);
      const start = el("input", { class: "num" });
      const end = el("input", { class: "num" });
      start.value = prior ? String(prior.nystagmus_start) : "";
      end.value = prior ? String(prior.nystagmus_end) : "";
      inputs.set(`${ear}${temp}`, [start, end]);
      return el("tr", {}, el("td", {}, `${ear} ${temp}`), el("td", {}, start), el("td", {}, end));
    }));
  const saveBtn = el("button", {}, "Save caloric measurement");
  saveBtn.onclick = () => {
    try {
      const span = (k: string): [number, number] => {
        const [s, e] = inputs.get(k)!;
        return [Number(s.value), Number(e.value)];
      };
      void save("caloric", buildCaloricRecord(examKey(state.patientId, state.examDate), {
        right44: span("right44C"),
        right30: span("right30C"),
        left44: span("left44C"),
        left30: span("left30C"),
      }));
    } catch (err) {
      flash(describe(err));
    }
  };
  const chart = el("div", { id: "chart", class: "chart" });
  body.replaceChildren(el("h2", {}, "Bithermal Caloric"), table, saveBtn, chart);
  await showChart(chart, "calorigram");
}

function renderReportTab(body: HTMLElement) {
  const open = el("button", {}, "Open PDF report");
  open.onclick = async () => {
    try {
      const blob = await api.fetchReportPdf(state.patientId, state.examDate);
      window.open(URL.createObjectURL(blob), "_blank");
    } catch (err) {
      flash(describe(err));
    }
  };
  body.replaceChildren(el("h2", {}, "Report"), open);
}

// ---------------------------------------------------------------------------
// Metrics sidebar
// ---------------------------------------------------------------------------

async function refreshMetrics() {
  const box = document.getElementById("metrics");
  if (!box || !state.patientId) return;
  try {
    const m = await api.getMetrics(state.patientId, state.examDate);
    const rows: [string, string][] = [];
    if (m.disability) {
      rows.push(["Impairment R/L (%)",
        `${fmt1(m.disability.impairment_right_pct)} / ${fmt1(m.disability.impairment_left_pct)}`]);
      rows.push(["Disability (%)", fmt1(m.disability.disability_pct)]);
    }
    if (m.speech) {
      for (const [ear, s] of Object.entries(m.speech))
        rows.push([`SRT ${ear} (dB HL)`, s.srt === null ? "not reached" : String(s.srt)]);
    }
    if (m.sisi) rows.push([`SISI ${m.sisi.ear} (%)`, fmt1(m.sisi.score_pct)]);
    if (m.caloric) {
      rows.push(["Canal paresis (%)", fmt1(m.caloric.canal_paresis_pct)]);
      rows.push(["Directional preponderance (%)", fmt1(m.caloric.directional_preponderance_pct)]);
    }
    if (m.peak_pressure) {
      for (const [ear, p] of Object.entries(m.peak_pressure))
        rows.push([`Peak pressure ${ear} (daPa)`, String(p)]);
    }
    box.replaceChildren(
      el("h3", {}, "Metrics"),
      rows.length
        ? el("table", {}, ...rows.map(([k, v]) =>
            el("tr", {}, el("td", {}, k), el("td", {}, v))))
        : el("p", { class: "muted" }, "No computable metrics yet."),
    );
  } catch (err) {
    box.replaceChildren(el("h3", {}, "Metrics"), el("p", { class: "muted" }, describe(err)));
  }
}

// ---------------------------------------------------------------------------
// Search view
// ---------------------------------------------------------------------------

async function renderSearch() {
  const body = document.getElementById("tab-body")!;
  const pid = el("input", { placeholder: "patient id" });
  const name = el("input", { placeholder: "name contains" });
  const from = el("input", { placeholder: "from YYYY-MM-DD" });
  const to = el("input", { placeholder: "to YYYY-MM-DD" });
  const results = el("div", { id: "search-results" });
  const run = el("button", {}, "Search");
  run.onclick = async () => {
    try {
      const hits = await api.search({
        patient_id: pid.value.trim() || undefined,
        name: name.value.trim() || undefined,
        date_from: from.value.trim() || undefined,
        date_to: to.value.trim() || undefined,
      });
      results.replaceChildren(
        hits.length
          ? el("table", {},
              el("tr", {}, ...["Patient", "Date", "Name", "Diagnosis", ""].map((h) => el("th", {}, h))),
              ...hits.map((h) => {
                const openBtn = el("button", { class: "secondary" }, "Open");
                openBtn.onclick = () => {
                  state.patientId = h.patient_id;
                  state.examDate = h.exam_date;
                  renderWorkspace();
                };
                return el("tr", {},
                  el("td", {}, h.patient_id), el("td", {}, h.exam_date),
                  el("td", {}, h.name), el("td", {}, h.diagnosis), el("td", {}, openBtn));
              }))
          : el("p", { class: "muted" }, "No matching exams."),
      );
    } catch (err) {
      flash(describe(err));
    }
  };
  body.replaceChildren(el("h2", {}, "Search exams"), pid, name, from, to, run, results);
}

renderLogin();
