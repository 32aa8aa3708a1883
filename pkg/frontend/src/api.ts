import type {
  CommentDoc,
  ConfidenceLevel,
  EstimateDoc,
  FixRecordDoc,
  FpMode,
  RunUploadDoc,
  SolutionDoc,
  TriageDoc,
  ViewDoc,
  VoteDirection,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ViewParams {
  level: number;
  minConfidence: ConfidenceLevel;
  maxRank: number;
  fpMode: FpMode;
  cap?: number;
  seed?: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Typed client for the warden /api/v1 endpoints.
 *
 * Reads go out as they come; mutations are funneled through a single
 * promise chain so this session's writes reach the server in the order
 * the user performed them, even when responses straggle.
 */
export class ApiClient {
  private mutations: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "HttpError";
      let message = `${resp.status}`;
      try {
        const doc = (await resp.json()) as { error?: { code: string; message: string } };
        if (doc.error) {
          code = doc.error.code;
          message = doc.error.message;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  private mutate<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.mutations.then(fn, fn);
    this.mutations = next.then(
      () => undefined,
      () => undefined,
    );
    return next;
  }

  getView(projectId: string, params: ViewParams): Promise<ViewDoc> {
    const query = new URLSearchParams({
      level: String(params.level),
      minConfidence: params.minConfidence.toLowerCase(),
      maxRank: String(params.maxRank),
      fpMode: params.fpMode.toLowerCase(),
    });
    if (params.cap !== undefined) query.set("cap", String(params.cap));
    if (params.seed !== undefined) query.set("seed", String(params.seed));
    return this.request("GET", `/api/v1/projects/${projectId}/view?${query}`);
  }

  getTriage(projectId: string): Promise<TriageDoc> {
    return this.request("GET", `/api/v1/projects/${projectId}/triage`);
  }

  putTriage(projectId: string, triage: TriageDoc): Promise<{ version: number }> {
    return this.mutate(() =>
      this.request("PUT", `/api/v1/projects/${projectId}/triage`, triage),
    );
  }

  postRun(projectId: string, runDoc: unknown): Promise<RunUploadDoc> {
    return this.mutate(() =>
      this.request("POST", `/api/v1/projects/${projectId}/runs`, runDoc),
    );
  }

  getComments(patternId: string): Promise<CommentDoc[]> {
    return this.request("GET", `/api/v1/patterns/${patternId}/comments`);
  }

  postComment(
    patternId: string,
    text: string,
    author?: string,
    fingerprint?: string,
  ): Promise<CommentDoc> {
    const body: Record<string, string> = { text };
    if (author) body.author = author;
    if (fingerprint) body.fingerprint = fingerprint;
    return this.mutate(() =>
      this.request("POST", `/api/v1/patterns/${patternId}/comments`, body),
    );
  }

  getSolutions(patternId: string): Promise<SolutionDoc[]> {
    return this.request("GET", `/api/v1/patterns/${patternId}/solutions`);
  }

  postSolution(patternId: string, text: string, codeSnippet?: string): Promise<SolutionDoc> {
    const body: Record<string, string> = { text };
    if (codeSnippet) body.codeSnippet = codeSnippet;
    return this.mutate(() =>
      this.request("POST", `/api/v1/patterns/${patternId}/solutions`, body),
    );
  }

  vote(solutionId: string, direction: VoteDirection): Promise<SolutionDoc> {
    return this.mutate(() =>
      this.request("POST", `/api/v1/solutions/${solutionId}/votes`, { direction }),
    );
  }

  getEstimate(patternId: string): Promise<EstimateDoc> {
    return this.request("GET", `/api/v1/fixtimes/${patternId}/estimate`);
  }

  recordFix(patternId: string, minutes: number): Promise<FixRecordDoc> {
    return this.mutate(() =>
      this.request("POST", "/api/v1/fixtimes", { patternId, minutes }),
    );
  }
}
