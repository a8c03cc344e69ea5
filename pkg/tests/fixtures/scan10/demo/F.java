package demo;

class F {
    String json = """
        {"a": 1, "b": 2.0}
        """;
    String s = "x" + 5;
    long t = 077;
}
