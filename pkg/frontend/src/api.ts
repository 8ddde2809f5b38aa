// Thin typed wrapper around the record service's HTTP API.
// Every call goes through fetch so it can be stubbed in tests.

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: ApiErrorBody,
  ) {
    super(body.message);
    this.name = "ApiError";
  }
}

export interface Session {
  token: string;
  expires_at: number;
}

export interface SearchHit {
  patient_id: string;
  exam_date: string;
  name: string;
  diagnosis: string;
}

export interface ExamMetrics {
  disability: {
    avg_speech_perception_right: number;
    avg_speech_perception_left: number;
    impairment_right_pct: number;
    impairment_left_pct: number;
    disability_pct: number;
  } | null;
  speech: Record<
    string,
    { srt: number | null; sd_score: number | null; sd_intensity: number | null }
  > | null;
  sisi: { ear: string; score_pct: number } | null;
  caloric: {
    canal_paresis_pct: number;
    directional_preponderance_pct: number;
    durations: Record<string, number>;
  } | null;
  peak_pressure: Record<string, number> | null;
}

export const CATEGORIES = [
  "patient",
  "ac_masked",
  "ac_unmasked",
  "bc_masked",
  "bc_unmasked",
  "ac_aided",
  "loudness_level",
  "sound_field",
  "hearing_disability",
  "ablb",
  "sisi",
  "tone_decay",
  "stenger",
  "tuning_fork",
  "speech",
  "impedance",
  "caloric",
] as const;

export type Category = (typeof CATEGORIES)[number];

export const CHART_KINDS = [
  "audiogram",
  "speech",
  "tympanogram",
  "calorigram",
  "laddergram",
] as const;

export type ChartKind = (typeof CHART_KINDS)[number];

export class ApiClient {
  private token: string | null = null;

  constructor(private base: string = "") {}

  get loggedIn(): boolean {
    return this.token !== null;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const resp = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await resp.json()) as ApiErrorBody;
      } catch {
        parsed = { code: "http-error", message: resp.statusText, details: {} };
      }
      throw new ApiError(resp.status, parsed);
    }
    return (await resp.json()) as T;
  }

  async login(username: string, password: string): Promise<Session> {
    const s = await this.request<Session>("POST", "/auth/login", {
      username,
      password,
    });
    this.token = s.token;
    return s;
  }

  async register(username: string, password: string): Promise<Session> {
    const s = await this.request<Session>("POST", "/auth/register", {
      username,
      password,
    });
    this.token = s.token;
    return s;
  }

  logout(): void {
    this.token = null;
  }

  examPath(patientId: string, examDate: string): string {
    return `/patients/${encodeURIComponent(patientId)}/exams/${encodeURIComponent(examDate)}`;
  }

  getRecord(patientId: string, examDate: string, category: Category) {
    return this.request<Record<string, unknown>>(
      "GET",
      `${this.examPath(patientId, examDate)}/${category}`,
    );
  }

  putRecord(
    patientId: string,
    examDate: string,
    category: Category,
    record: Record<string, unknown>,
  ) {
    return this.request<Record<string, unknown>>(
      "PUT",
      `${this.examPath(patientId, examDate)}/${category}`,
      record,
    );
  }

  getExam(patientId: string, examDate: string) {
    return this.request<Record<string, unknown>>(
      "GET",
      this.examPath(patientId, examDate),
    );
  }

  deleteExam(patientId: string, examDate: string) {
    return this.request<{ rows_removed: number }>(
      "DELETE",
      this.examPath(patientId, examDate),
    );
  }

  getMetrics(patientId: string, examDate: string) {
    return this.request<ExamMetrics>(
      "GET",
      `${this.examPath(patientId, examDate)}/metrics`,
    );
  }

  async search(params: {
    patient_id?: string;
    name?: string;
    date_from?: string;
    date_to?: string;
  }): Promise<SearchHit[]> {
    const qs = new URLSearchParams();
    for (const [k, v] of Object.entries(params)) {
      if (v) qs.set(k, v);
    }
    const body = await this.request<{ results: SearchHit[] }>(
      "GET",
      `/search?${qs.toString()}`,
    );
    return body.results;
  }

  async fetchChart(
    patientId: string,
    examDate: string,
    kind: ChartKind,
    opts: { ear?: string; categories?: string[] } = {},
  ): Promise<string> {
    const qs = new URLSearchParams();
    if (opts.ear) qs.set("ear", opts.ear);
    if (opts.categories && opts.categories.length)
      qs.set("categories", opts.categories.join(","));
    const suffix = qs.size ? `?${qs.toString()}` : "";
    const headers: Record<string, string> = this.token
      ? { Authorization: `Bearer ${this.token}` }
      : {};
    const resp = await fetch(
      `${this.base}${this.examPath(patientId, examDate)}/charts/${kind}.svg${suffix}`,
      { headers },
    );
    if (!resp.ok) {
      const parsed = (await resp.json()) as ApiErrorBody;
      throw new ApiError(resp.status, parsed);
    }
    return resp.text();
  }

  async fetchReportPdf(patientId: string, examDate: string): Promise<Blob> {
    const headers: Record<string, string> = this.token
      ? { Authorization: `Bearer ${this.token}` }
      : {};
    const resp = await fetch(
      `${this.base}${this.examPath(patientId, examDate)}/report.pdf`,
      { headers },
    );
    if (!resp.ok) {
      const parsed = (await resp.json()) as ApiErrorBody;
      throw new ApiError(resp.status, parsed);
    }
    return resp.blob();
  }
}
