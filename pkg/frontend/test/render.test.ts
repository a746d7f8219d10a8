/**
 * DOM assertions against a mocked API: pairs render side by side, label
 * errors show the label, question texts arrive verbatim, terminal screens
 * disable input, and nothing annotator-visible ever carries rank, score,
 * or streak.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionScreen } from "../src/session.js";
import { expectNoBannedKeys } from "./util.js";

const QUESTION_IRRELEVANT =
  "Your task is to judge if the image shown is irrelevant. " +
  "Select yes when the image is not a valid input for the task at hand.";
const QUESTION_PAIR =
  "Your task is to judge whether the two images shown together are pictures " +
  "of the same object. Note that pictures of the same object can be identical " +
  "or different shots with the same object of interest.";
const QUESTION_LABEL =
  "Your task is to judge whether the image's label is correct. " +
  "Please select that the label is an error only if you think it is wrong " +
  "and not when there is low uncertainty or ambiguity.";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function scriptedApi(nextBodies: unknown[]): ApiClient {
  let cursor = 0;
  const answers: unknown[] = [];
  return new ApiClient("", async (input: string, init?: RequestInit) => {
    if (input.endsWith("/next")) {
      const body = nextBodies[Math.min(cursor, nextBodies.length - 1)];
      return jsonResponse(body);
    }
    if (input.endsWith("/answer")) {
      answers.push(init?.body);
      cursor += 1;
      return jsonResponse({ status: "active", annotated_count: cursor });
    }
    throw new Error(`unexpected request ${input}`);
  });
}

function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

describe("candidate rendering", () => {
  beforeEach(() => {
    document.body.innerHTML = "";
  });

  it("renders a near-duplicate pair side by side with the pair question", async () => {
    const api = scriptedApi([
      {
        candidate: {
          kind: "pair",
          ids: ["a", "b"],
          image_urls: ["/datasets/d/images/a", "/datasets/d/images/b"],
        },
        question: QUESTION_PAIR,
      },
    ]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s1", document, 5);
    await screen.start();

    expect(root.querySelector(".question")!.textContent).toBe(QUESTION_PAIR);
    const holder = root.querySelector(".candidate.pair")!;
    const images = holder.querySelectorAll("img");
    expect(images.length).toBe(2);
    expect(images[0].getAttribute("src")).toBe("/datasets/d/images/a");
    expect(images[1].getAttribute("src")).toBe("/datasets/d/images/b");
    screen.stop();
  });

  it("renders a label-error candidate with its label shown", async () => {
    const api = scriptedApi([
      {
        candidate: {
          kind: "single",
          ids: ["x"],
          image_urls: ["/datasets/d/images/x"],
          label: "melanoma",
        },
        question: QUESTION_LABEL,
      },
    ]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s2", document, 5);
    await screen.start();

    expect(root.querySelector(".question")!.textContent).toBe(QUESTION_LABEL);
    expect(root.querySelectorAll(".candidate img").length).toBe(1);
    expect(root.querySelector(".candidate-label")!.textContent).toBe("Label: melanoma");
    screen.stop();
  });

  it("renders a single irrelevant candidate with its question and no label", async () => {
    const api = scriptedApi([
      {
        candidate: {
          kind: "single",
          ids: ["x"],
          image_urls: ["/datasets/d/images/x"],
        },
        question: QUESTION_IRRELEVANT,
      },
    ]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s3", document, 5);
    await screen.start();

    expect(root.querySelector(".question")!.textContent).toBe(QUESTION_IRRELEVANT);
    expect(root.querySelector(".candidate-label")).toBeNull();
    screen.stop();
  });

  it("answers by keyboard and advances", async () => {
    const api = scriptedApi([
      {
        candidate: { kind: "single", ids: ["x"], image_urls: ["/i/x"] },
        question: QUESTION_IRRELEVANT,
      },
      { status: "stopped_by_criterion", annotated_count: 1 },
    ]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s4", document, 5);
    await screen.start();

    document.dispatchEvent(new KeyboardEvent("keydown", { key: "y" }));
    await new Promise((resolve) => setTimeout(resolve, 50));

    expect(screen.sentAnswers).toEqual([{ ids: ["x"], verdict: "yes" }]);
    expect(screen.isTerminal()).toBe(true);
    expect(root.querySelector(".terminal")!.textContent).toBe("Stopped by criterion");
    expect(root.querySelector(".terminal-count")!.textContent).toBe("Annotated: 1");
    screen.stop();
  });

  it("terminal screen disables inputs and ignores further keys", async () => {
    const api = scriptedApi([{ status: "exhausted", annotated_count: 3 }]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s5", document, 5);
    await screen.start();

    expect(root.querySelector(".terminal")!.textContent).toBe("Ranking exhausted");
    const button = root.querySelector("button")! as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "y" }));
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(screen.sentAnswers.length).toBe(0);
    screen.stop();
  });

  it("never renders rank, score, or streak anywhere", async () => {
    const api = scriptedApi([
      {
        candidate: { kind: "single", ids: ["x"], image_urls: ["/i/x"] },
        question: QUESTION_IRRELEVANT,
      },
    ]);
    const root = mount();
    const screen = new SessionScreen(root, api, "s6", document, 5);
    await screen.start();

    const text = (root.textContent ?? "").toLowerCase();
    for (const banned of ["rank", "score", "streak"]) {
      expect(text).not.toContain(banned);
    }
    for (const payload of screen.observedPayloads) {
      expectNoBannedKeys(payload);
    }
    screen.stop();
  });

  it("shows a retry banner on network failure and recovers", async () => {
    let failures = 1;
    const api = new ApiClient("", async (input: string) => {
      if (failures > 0) {
        failures -= 1;
        throw new Error("connection refused");
      }
      return jsonResponse({ status: "exhausted", annotated_count: 0 });
    });
    const root = mount();
    const screen = new SessionScreen(root, api, "s7", document, 5);
    await screen.start();

    const banner = root.querySelector(".error-banner")!;
    expect(banner).not.toBeNull();
    (banner.querySelector("button.retry")! as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 20));
    expect(root.querySelector(".terminal")).not.toBeNull();
    screen.stop();
  });
});
