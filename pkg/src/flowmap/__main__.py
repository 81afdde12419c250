if __name__ == "__main__":
    from flowmap.main import app

    app(prog_name="flowmap")
