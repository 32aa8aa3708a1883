import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

/** Parse a captured server response; a fresh copy per call. */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), "utf-8")) as T;
}

export interface LoggedRequest {
  method: string;
  url: string;
  params: URLSearchParams;
  body: unknown;
}

interface Route {
  method: string;
  match: (url: string) => boolean;
  respond: (req: LoggedRequest) => { status: number; body: unknown };
  once: boolean;
}

/**
 * In-memory stand-in for the sync server. Tests register routes (later
 * registrations win, `once` routes are consumed) and inspect the full
 * request log afterwards.
 */
export class FakeServer {
  requests: LoggedRequest[] = [];
  failAll = false;
  private routes: Route[] = [];

  on(
    method: string,
    path: string | RegExp,
    body: unknown | ((req: LoggedRequest) => { status: number; body: unknown }),
    options: { status?: number; once?: boolean } = {},
  ): void {
    const match =
      typeof path === "string" ? (url: string) => url.split("?")[0] === path : (url: string) => path.test(url);
    const respond =
      typeof body === "function"
        ? (body as (req: LoggedRequest) => { status: number; body: unknown })
        : () => ({ status: options.status ?? 200, body });
    this.routes.push({ method, match, respond, once: options.once ?? false });
  }

  fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    if (this.failAll) {
      throw new TypeError("network down");
    }
    const req: LoggedRequest = {
      method: init?.method ?? "GET",
      url,
      params: new URLSearchParams(url.split("?")[1] ?? ""),
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    };
    this.requests.push(req);
    for (let i = this.routes.length - 1; i >= 0; i--) {
      const route = this.routes[i]!;
      if (route.method === req.method && route.match(url)) {
        if (route.once) this.routes.splice(i, 1);
        const { status, body } = route.respond(req);
        return new Response(JSON.stringify(body), {
          status,
          headers: { "content-type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ error: { code: "NotFound", message: url } }), {
      status: 404,
      headers: { "content-type": "application/json" },
    });
  };

  viewRequests(): LoggedRequest[] {
    return this.requests.filter(
      (r) => r.method === "GET" && r.url.includes("/view?"),
    );
  }

  ofPath(method: string, path: string): LoggedRequest[] {
    return this.requests.filter(
      (r) => r.method === method && r.url.split("?")[0] === path,
    );
  }
}

/** Routes mirroring the captured demo project state. */
export function standardServer(projectId = "default"): FakeServer {
  const server = new FakeServer();
  let version = 1;

  server.on("GET", `/api/v1/projects/${projectId}/view`, (req: LoggedRequest) => {
    const level = req.params.get("level") ?? "5";
    const dim = req.params.get("fpMode") === "dim";
    const byLevel: Record<string, string> = {
      "0": dim ? "view_l0_dim.json" : "view_l0.json",
      "1": "view_l1.json",
      "2": "view_l2.json",
      "5": "view_l5.json",
    };
    return { status: 200, body: fixture(byLevel[level] ?? "view_l5.json") };
  });
  server.on("GET", `/api/v1/projects/${projectId}/triage`, () => ({
    status: 200,
    body: { ...fixture<Record<string, unknown>>("triage.json"), version },
  }));
  server.on("PUT", `/api/v1/projects/${projectId}/triage`, () => ({
    status: 200,
    body: { version: ++version },
  }));
  server.on("GET", /\/api\/v1\/patterns\/[^/]+\/comments$/, fixture("comments.json"));
  server.on("POST", /\/api\/v1\/patterns\/[^/]+\/comments$/, fixture("comment_post.json"), {
    status: 201,
  });
  server.on("GET", /\/api\/v1\/patterns\/[^/]+\/solutions$/, fixture("solutions.json"));
  server.on("POST", /\/api\/v1\/solutions\/[^/]+\/votes$/, fixture("vote_post.json"));
  server.on("GET", /\/api\/v1\/fixtimes\/PT_ALPHA\/estimate$/, fixture("estimate_ready.json"));
  server.on("GET", /\/api\/v1\/fixtimes\/[^/]+\/estimate$/, (req: LoggedRequest) => {
    const pattern = /\/fixtimes\/([^/]+)\/estimate/.exec(req.url)?.[1] ?? "";
    return {
      status: 200,
      body: { ...fixture<Record<string, unknown>>("estimate_insufficient.json"), patternId: pattern },
    };
  });
  server.on("POST", "/api/v1/fixtimes", fixture("fixtime_post.json"), { status: 201 });
  // PT_ALPHA must stay above the generic estimate route.
  server.on("GET", /\/api\/v1\/fixtimes\/PT_ALPHA\/estimate$/, fixture("estimate_ready.json"));
  return server;
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
